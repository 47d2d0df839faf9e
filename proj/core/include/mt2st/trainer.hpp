#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mt2st/cost_model.hpp"
#include "mt2st/model.hpp"
#include "mt2st/optimizer.hpp"
#include "mt2st/schedules.hpp"
#include "mt2st/task_suite.hpp"

namespace mt2st {

// Per-step telemetry. Cumulative FLOPs are carried in both accounting modes;
// wall_ms is the only field that is not reproducible across runs.
struct StepRecord {
  std::size_t step = 0;
  std::vector<double> losses;             // L_0 .. L_K, unweighted
  std::vector<double> gammas;             // gamma_1 .. gamma_K applied this step
  std::vector<double> encoder_grad_norms;  // per task, 0 .. K
  double alignment = 0.0;
  double flops_expected = 0.0;  // cumulative
  double flops_realized = 0.0;  // cumulative
  double wall_ms = 0.0;
};

// Plateau detector on the primary validation loss: when the window-averaged
// relative improvement drops below the threshold during the multi-task
// phase, all subsequent auxiliary weights are forced to zero.
struct FeedbackPolicy {
  std::size_t window = 50;
  double min_relative_improvement = 1e-3;
  bool enabled = false;
};

struct TaskMetrics {
  double loss = 0.0;
  std::optional<double> accuracy;  // classification tasks only
};

struct RunResult {
  ModelParams final_params;
  std::vector<StepRecord> records;
  std::optional<std::size_t> convergence_epoch;  // 1-based
  std::optional<std::size_t> switch_step_effective;
  std::vector<TaskMetrics> validation_metrics;  // per task, 0 .. K
};

// start_step shifts the step counter (batch selection and schedules are pure
// functions of the absolute step), which together with initial_params lets a
// run be continued exactly from a snapshot of another run.
struct TrainOptions {
  std::size_t start_step = 0;
  std::optional<ModelParams> initial_params;
};

enum class Split { Train, Validation };

/**
 * The full training loop: per task forward/loss/backward, weight vector from
 * the schedule (adaptive variants read the current gradients, Fisher traces
 * or noise variances), gradient combination, SGD update, telemetry. Aborts
 * with NumericError naming the step and task if a loss turns non-finite.
 */
RunResult train(const TaskSuite& suite, const ModelConfig& model,
                const TaskWeightSchedule& schedule, const TrainConfig& cfg,
                const FeedbackPolicy& feedback, const CostModel& cost,
                const TrainOptions& options = {});

// Deterministic per-task loss (and accuracy for classification) on a split.
std::vector<TaskMetrics> evaluate(const ModelParams& params,
                                  const TaskSuite& suite, Split split);

}  // namespace mt2st
