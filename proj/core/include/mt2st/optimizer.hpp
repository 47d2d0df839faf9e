#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mt2st/model.hpp"

namespace mt2st {

// The combined descent direction for one step: encoder part is
// grad L_0 + sum_k gamma_k * grad L_k, head parts are per-task.
struct EffectiveGradient {
  std::vector<LayerGrads> encoder;
  std::vector<LayerGrads> heads;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t total_steps = 1;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
};

/**
 * Weighted gradient combination. aux[k] must be the gradient set of auxiliary
 * task k+1 and gammas must have one entry per auxiliary task. Terms with a
 * weight of exactly zero are skipped, so the all-zero case reproduces the
 * primary gradient bit for bit.
 */
EffectiveGradient combine(const GradientSet& primary,
                          std::span<const GradientSet> aux,
                          std::span<const double> gammas);

// Plain gradient descent: returns params - lr * grad. Pure.
ModelParams sgd_step(const ModelParams& params, const EffectiveGradient& grad,
                     double learning_rate);

// Inner product of the primary and effective gradients over the shared
// encoder parameters only. Positive alignment means the combined step still
// descends the primary loss.
double pl_alignment(const GradientSet& primary, const EffectiveGradient& eff);

}  // namespace mt2st
