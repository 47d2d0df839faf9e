#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mt2st/schedules.hpp"
#include "mt2st/task_suite.hpp"
#include "mt2st/trainer.hpp"

namespace mt2st {

struct StrategyConfig {
  std::string name;
  TaskWeightSchedule schedule;
};

// Declarative experiment description, parsed from a JSON document. Every
// source of randomness flows from the explicit seed list.
struct ExperimentConfig {
  SuiteConfig suite;  // per-seed suites reuse these parameters
  ModelConfig model;
  TrainConfig train;
  FeedbackPolicy feedback;
  std::vector<std::uint64_t> seeds;
  std::vector<StrategyConfig> strategies;
  std::string output_dir = "mt2st-out";
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& file);

// Semantic validation; throws ConfigError with a field-level message.
void validate_config(const ExperimentConfig& config);

struct CellSummary {
  std::string strategy;
  std::uint64_t seed = 0;
  double final_primary_loss = 0.0;
  std::optional<double> final_primary_accuracy;
  std::optional<std::size_t> convergence_epoch;
  std::optional<std::size_t> switch_step;
  double flops_expected = 0.0;
  double flops_realized = 0.0;
  // Realized-mode reduction vs the same-seed STL cell; absent when the
  // config contains no STL strategy.
  std::optional<double> compression_rate_pct;
};

struct StrategyAggregate {
  std::string strategy;
  double mean_final_loss = 0.0;
  double stddev_final_loss = 0.0;
  std::optional<double> mean_accuracy;
  double mean_flops_realized = 0.0;
  std::optional<double> mean_compression_pct;
  double mean_convergence_epoch = 0.0;
};

struct ComparisonReport {
  std::vector<CellSummary> cells;  // strategy-major, seed-minor order
  std::vector<StrategyAggregate> aggregates;
};

inline constexpr std::string_view kReportSchemaVersion = "mt2st-comparison-v1";
inline constexpr std::string_view kReportCsvHeader =
    "strategy,seed,final_primary_loss,final_primary_accuracy,"
    "convergence_epoch,switch_step,flops_expected,flops_realized,"
    "compression_rate_pct";

/**
 * Runs every (strategy x seed) cell of the grid, writes per-run step streams
 * and summaries plus report.csv and summary.json under output_dir, and
 * returns the assembled report. Cells execute concurrently; outputs are
 * byte-for-byte deterministic for a fixed config.
 */
ComparisonReport run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& output_dir);

void write_report_csv(std::ostream& out, const ComparisonReport& report);
std::string report_summary_json(const ExperimentConfig& config,
                                const ComparisonReport& report);

}  // namespace mt2st
