#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mt2st/errors.hpp"
#include "mt2st/experiment.hpp"
#include "mt2st/serialize.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path) {
  mt2st::ExperimentConfig config =
      mt2st::load_experiment_config(config_path);
  mt2st::validate_config(config);
  fs::path output_dir = config.output_dir;
  if (const char* env = std::getenv("MT2ST_OUTPUT_DIR"); env && *env)
    output_dir = env;

  const mt2st::ComparisonReport report =
      mt2st::run_experiment(config, output_dir);

  std::cout << "wrote " << (output_dir / "report.csv").string() << " and "
            << (output_dir / "summary.json").string() << "\n";
  std::cout << "strategy            mean_loss    mean_acc  compression%  "
               "conv_epochs\n";
  for (const mt2st::StrategyAggregate& agg : report.aggregates) {
    char acc[32] = "-";
    if (agg.mean_accuracy)
      std::snprintf(acc, sizeof(acc), "%.4f", *agg.mean_accuracy);
    char comp[32] = "-";
    if (agg.mean_compression_pct)
      std::snprintf(comp, sizeof(comp), "%.1f", *agg.mean_compression_pct);
    std::printf("%-18s %10.6f  %10s  %12s  %11.1f\n", agg.strategy.c_str(),
                agg.mean_final_loss, acc, comp, agg.mean_convergence_epoch);
  }
  return 0;
}

int cmd_series(const std::string& run_dir, const std::string& kind_name,
               const std::string& out_path) {
  const auto kind = mt2st::parse_series_kind(kind_name);
  if (!kind)
    throw mt2st::InputError("unknown series kind '" + kind_name +
                            "' (expected loss, gamma or alignment)");
  const fs::path stream_path = fs::path(run_dir) / "steps.txt";
  std::ifstream in(stream_path);
  if (!in)
    throw mt2st::InputError("cannot open " + stream_path.string());
  const mt2st::StepStream stream = mt2st::read_step_stream(in);
  if (out_path.empty()) {
    mt2st::emit_series(std::cout, stream.records, *kind);
  } else {
    std::ofstream out(out_path);
    if (!out) throw mt2st::InputError("cannot open " + out_path);
    mt2st::emit_series(out, stream.records, *kind);
  }
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const mt2st::ExperimentConfig config =
      mt2st::load_experiment_config(config_path);
  mt2st::validate_config(config);
  std::cout << "config ok: " << config.strategies.size() << " strategies x "
            << config.seeds.size() << " seeds, K="
            << config.suite.auxiliaries.size() << " auxiliary tasks\n";
  return 0;
}

int cmd_suite(const std::string& config_path, std::uint64_t seed,
              const std::string& out_path) {
  mt2st::ExperimentConfig config = mt2st::load_experiment_config(config_path);
  mt2st::validate_config(config);
  mt2st::SuiteConfig sc = config.suite;
  sc.seed = seed;
  const mt2st::TaskSuite suite = mt2st::generate_suite(sc);
  if (out_path.empty()) {
    mt2st::write_suite_text(std::cout, suite);
  } else {
    std::ofstream out(out_path);
    if (!out) throw mt2st::InputError("cannot open " + out_path);
    mt2st::write_suite_text(out, suite);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MT2ST experiment harness: multi-task to single-task "
               "training with scheduled or adaptive auxiliary weights"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")
      ->required();

  std::string run_dir, series_kind, series_out;
  CLI::App* series =
      app.add_subcommand("series", "extract a plot-ready series from a run");
  series->add_option("run-dir", run_dir, "per-run output directory")
      ->required();
  series->add_option("--kind", series_kind, "loss | gamma | alignment")
      ->required()
      ->check(CLI::IsMember({"loss", "gamma", "alignment"}));
  series->add_option("-o,--out", series_out, "output file (default stdout)");

  std::string validate_path;
  CLI::App* validate =
      app.add_subcommand("validate", "parse and validate a config, run nothing");
  validate->add_option("config", validate_path, "experiment config (JSON)")
      ->required();

  std::string suite_config_path, suite_out;
  std::uint64_t suite_seed = 0;
  CLI::App* suite = app.add_subcommand(
      "suite", "generate a synthetic suite and dump it as columnar text");
  suite->add_option("config", suite_config_path, "experiment config (JSON)")
      ->required();
  suite->add_option("--seed", suite_seed, "suite seed")->required();
  suite->add_option("-o,--out", suite_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (series->parsed()) return cmd_series(run_dir, series_kind, series_out);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (suite->parsed()) return cmd_suite(suite_config_path, suite_seed, suite_out);
  } catch (const mt2st::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
