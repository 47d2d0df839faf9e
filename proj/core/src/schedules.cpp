#include "mt2st/schedules.hpp"

#include <cmath>

#include "mt2st/errors.hpp"

namespace mt2st {

double gamma_diminish(std::size_t t, const DiminishParams& p) {
  const double td = static_cast<double>(t);
  return p.gamma0 * std::exp(-p.eta * std::pow(td, p.nu));
}

double gamma_switch(std::size_t t, const SwitchParams& p) {
  return t < p.t_switch ? 1.0 : 0.0;
}

namespace {

// Rescales raw weights so they sum to the budget. sum must be positive.
std::vector<double> rescale_to_budget(std::vector<double> raw, double sum,
                                      double lambda_budget) {
  const double scale = lambda_budget / sum;
  for (double& v : raw) v *= scale;
  return raw;
}

}  // namespace

AdaptiveWeights gamma_gradnorm(double primary_norm,
                               std::span<const double> aux_norms,
                               const AdaptiveParams& p) {
  if (!(primary_norm >= 0.0) || !std::isfinite(primary_norm))
    throw InputError("primary gradient norm must be finite and nonnegative");
  AdaptiveWeights result;
  if (primary_norm == 0.0) {
    // Primary gradient vanished: training is done, drop all auxiliaries.
    result.gamma.assign(aux_norms.size(), 0.0);
    result.fallback = AdaptiveFallback::PrimaryConverged;
    return result;
  }
  std::vector<double> raw(aux_norms.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < aux_norms.size(); ++k) {
    if (!(aux_norms[k] >= 0.0) || !std::isfinite(aux_norms[k]))
      throw InputError("auxiliary gradient norm must be finite, nonnegative");
    raw[k] = primary_norm / (aux_norms[k] + p.epsilon);
    sum += raw[k];
  }
  result.gamma = rescale_to_budget(std::move(raw), sum, p.lambda_budget);
  return result;
}

AdaptiveWeights gamma_fisher(std::span<const FisherEstimate> traces,
                             const AdaptiveParams& p) {
  AdaptiveWeights result;
  double sum = 0.0;
  for (const FisherEstimate& est : traces) {
    if (!(est.trace >= 0.0) || !std::isfinite(est.trace))
      throw InputError("Fisher trace must be finite and nonnegative");
    sum += est.trace;
  }
  if (sum == 0.0) {
    // No curvature signal yet; keep the multi-task phase alive uniformly.
    result.gamma.assign(traces.size(),
                        p.lambda_budget / static_cast<double>(traces.size()));
    result.fallback = AdaptiveFallback::UniformTraces;
    return result;
  }
  result.gamma.resize(traces.size());
  for (std::size_t k = 0; k < traces.size(); ++k)
    result.gamma[k] = traces[k].trace / sum * p.lambda_budget;
  return result;
}

AdaptiveWeights gamma_variance(std::size_t t,
                               const NoiseVarianceProvider& provider,
                               const AdaptiveParams& p) {
  if (!provider) throw InputError("noise variance provider is empty");
  const std::vector<double> variances = provider(t);
  std::vector<double> raw(variances.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < variances.size(); ++k) {
    if (variances[k] < 0.0 || !std::isfinite(variances[k]))
      throw InputError("noise variance for task " + std::to_string(k + 1) +
                       " at step " + std::to_string(t) +
                       " is negative or non-finite");
    raw[k] = 1.0 / (variances[k] + p.epsilon);
    sum += raw[k];
  }
  AdaptiveWeights result;
  result.gamma = rescale_to_budget(std::move(raw), sum, p.lambda_budget);
  return result;
}

FisherEstimate estimate_fisher_trace(const GradientSet& grads) {
  double sum = 0.0;
  for (const LayerGrads& layer : grads.encoder) {
    for (double v : layer.weight.data) sum += v * v;
    for (double v : layer.bias) sum += v * v;
  }
  return FisherEstimate{sum};
}

void validate_params(const DiminishParams& p) {
  if (!(p.gamma0 >= 0.0)) throw ConfigError("diminish gamma0 must be >= 0");
  if (!(p.eta >= 0.0)) throw ConfigError("diminish eta must be >= 0");
  if (!(p.nu >= 1.0)) throw ConfigError("diminish nu must be >= 1");
}

void validate_params(const AdaptiveParams& p) {
  if (!(p.lambda_budget > 0.0))
    throw ConfigError("adaptive lambda budget must be > 0");
  if (!(p.epsilon > 0.0)) throw ConfigError("adaptive epsilon must be > 0");
}

void validate_schedule(const TaskWeightSchedule& schedule,
                       std::size_t aux_count) {
  std::visit(
      [aux_count](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiminishSchedule>) {
          if (s.per_task.size() != aux_count)
            throw ConfigError("diminish schedule has " +
                              std::to_string(s.per_task.size()) +
                              " task entries, suite has " +
                              std::to_string(aux_count) + " auxiliaries");
          for (const DiminishParams& p : s.per_task) validate_params(p);
        } else if constexpr (std::is_same_v<T, FixedMtlSchedule>) {
          if (s.gammas.size() != aux_count)
            throw ConfigError("fixed_mtl schedule has " +
                              std::to_string(s.gammas.size()) +
                              " weights, suite has " +
                              std::to_string(aux_count) + " auxiliaries");
          for (double g : s.gammas)
            if (!(g >= 0.0)) throw ConfigError("fixed_mtl weights must be >= 0");
        } else if constexpr (std::is_same_v<T, GradNormSchedule> ||
                             std::is_same_v<T, FisherSchedule> ||
                             std::is_same_v<T, VarianceSchedule>) {
          validate_params(s.params);
        }
      },
      schedule);
}

std::string schedule_kind_name(const TaskWeightSchedule& schedule) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiminishSchedule>) return "diminish";
        else if constexpr (std::is_same_v<T, SwitchSchedule>) return "switch";
        else if constexpr (std::is_same_v<T, GradNormSchedule>)
          return "grad_norm";
        else if constexpr (std::is_same_v<T, FisherSchedule>) return "fisher";
        else if constexpr (std::is_same_v<T, VarianceSchedule>)
          return "variance";
        else if constexpr (std::is_same_v<T, FixedMtlSchedule>)
          return "fixed_mtl";
        else
          return "none_stl";
      },
      schedule);
}

bool is_adaptive(const TaskWeightSchedule& schedule) {
  return std::holds_alternative<GradNormSchedule>(schedule) ||
         std::holds_alternative<FisherSchedule>(schedule) ||
         std::holds_alternative<VarianceSchedule>(schedule);
}

}  // namespace mt2st
