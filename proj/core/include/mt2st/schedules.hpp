#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mt2st/model.hpp"

namespace mt2st {

// Exponential decay gamma0 * exp(-eta * t^nu) for one auxiliary task.
struct DiminishParams {
  double gamma0 = 1.0;
  double eta = 0.0;
  double nu = 1.0;  // curvature, >= 1
};

struct SwitchParams {
  std::size_t t_switch = 0;
};

struct AdaptiveParams {
  double lambda_budget = 1.0;  // weights are rescaled to sum to this
  double epsilon = 1e-8;
};

struct DiminishSchedule {
  std::vector<DiminishParams> per_task;  // one entry per auxiliary task
};
struct SwitchSchedule {
  SwitchParams params;
};
struct GradNormSchedule {
  AdaptiveParams params;
};
struct FisherSchedule {
  AdaptiveParams params;
};
struct VarianceSchedule {
  AdaptiveParams params;
};
struct FixedMtlSchedule {
  std::vector<double> gammas;  // constant weight per auxiliary task
};
struct NoneStlSchedule {};  // single-task training, all weights zero

using TaskWeightSchedule =
    std::variant<DiminishSchedule, SwitchSchedule, GradNormSchedule,
                 FisherSchedule, VarianceSchedule, FixedMtlSchedule,
                 NoneStlSchedule>;

// Empirical Fisher trace proxy: sum of squared encoder-gradient entries.
struct FisherEstimate {
  double trace = 0.0;
};

// Maps a step index to the per-auxiliary-task noise variance sigma_k^2(t).
using NoiseVarianceProvider =
    std::function<std::vector<double>(std::size_t t)>;

// Degenerate-input handling for the adaptive variants.
enum class AdaptiveFallback {
  None,
  PrimaryConverged,  // primary gradient vanished: all weights zero
  UniformTraces,     // all Fisher traces zero: uniform lambda/K
};

struct AdaptiveWeights {
  std::vector<double> gamma;
  AdaptiveFallback fallback = AdaptiveFallback::None;
};

double gamma_diminish(std::size_t t, const DiminishParams& p);

// Hard indicator: 1 while t < t_switch, 0 afterwards (strict inequality).
double gamma_switch(std::size_t t, const SwitchParams& p);

// Inverse-gradient-norm weights, rescaled so the vector sums to the budget.
AdaptiveWeights gamma_gradnorm(double primary_norm,
                               std::span<const double> aux_norms,
                               const AdaptiveParams& p);

// Relative Fisher-trace weights: trace_k / sum_j trace_j * lambda.
AdaptiveWeights gamma_fisher(std::span<const FisherEstimate> traces,
                             const AdaptiveParams& p);

// Inverse-variance weights 1 / (sigma_k^2(t) + eps), rescaled to the budget.
AdaptiveWeights gamma_variance(std::size_t t,
                               const NoiseVarianceProvider& provider,
                               const AdaptiveParams& p);

FisherEstimate estimate_fisher_trace(const GradientSet& grads);

void validate_params(const DiminishParams& p);
void validate_params(const AdaptiveParams& p);

// Checks variant parameters and that per-task lists have length aux_count.
void validate_schedule(const TaskWeightSchedule& schedule,
                       std::size_t aux_count);

std::string schedule_kind_name(const TaskWeightSchedule& schedule);

// True for the variants that recompute weights from training state each step.
bool is_adaptive(const TaskWeightSchedule& schedule);

}  // namespace mt2st
