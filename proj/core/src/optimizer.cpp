#include "mt2st/optimizer.hpp"

#include <string>

#include "mt2st/errors.hpp"

namespace mt2st {

namespace {

void check_same_layout(const GradientSet& a, const GradientSet& b) {
  if (a.encoder.size() != b.encoder.size() || a.heads.size() != b.heads.size())
    throw ContractError("gradient sets have different layer layouts");
  for (std::size_t l = 0; l < a.encoder.size(); ++l) {
    if (!a.encoder[l].weight.same_shape(b.encoder[l].weight))
      throw ContractError("encoder gradient shape mismatch at layer " +
                          std::to_string(l));
  }
  for (std::size_t k = 0; k < a.heads.size(); ++k) {
    if (!a.heads[k].weight.same_shape(b.heads[k].weight))
      throw ContractError("head gradient shape mismatch at head " +
                          std::to_string(k));
  }
}

}  // namespace

EffectiveGradient combine(const GradientSet& primary,
                          std::span<const GradientSet> aux,
                          std::span<const double> gammas) {
  if (aux.size() != gammas.size())
    throw ContractError("combine: " + std::to_string(aux.size()) +
                        " aux gradients vs " + std::to_string(gammas.size()) +
                        " weights");
  if (primary.task_index != 0)
    throw ContractError("combine: primary gradient set has task_index != 0");
  EffectiveGradient eff;
  eff.encoder = primary.encoder;
  eff.heads.resize(primary.heads.size());
  for (std::size_t k = 0; k < primary.heads.size(); ++k) {
    eff.heads[k].weight = Tensor2::zeros(primary.heads[k].weight.rows,
                                         primary.heads[k].weight.cols);
    eff.heads[k].bias.assign(primary.heads[k].bias.size(), 0.0);
  }
  eff.heads[0] = primary.heads[0];

  for (std::size_t k = 0; k < aux.size(); ++k) {
    check_same_layout(primary, aux[k]);
    if (aux[k].task_index != k + 1)
      throw ContractError("combine: aux gradient " + std::to_string(k) +
                          " has task_index " +
                          std::to_string(aux[k].task_index));
    const double g = gammas[k];
    if (g == 0.0) continue;  // keep the STL limit exact
    for (std::size_t l = 0; l < eff.encoder.size(); ++l) {
      const LayerGrads& src = aux[k].encoder[l];
      LayerGrads& dst = eff.encoder[l];
      for (std::size_t i = 0; i < src.weight.data.size(); ++i)
        dst.weight.data[i] += g * src.weight.data[i];
      for (std::size_t i = 0; i < src.bias.size(); ++i)
        dst.bias[i] += g * src.bias[i];
    }
    const LayerGrads& head_src = aux[k].heads[k + 1];
    LayerGrads& head_dst = eff.heads[k + 1];
    for (std::size_t i = 0; i < head_src.weight.data.size(); ++i)
      head_dst.weight.data[i] += g * head_src.weight.data[i];
    for (std::size_t i = 0; i < head_src.bias.size(); ++i)
      head_dst.bias[i] += g * head_src.bias[i];
  }
  return eff;
}

ModelParams sgd_step(const ModelParams& params, const EffectiveGradient& grad,
                     double learning_rate) {
  if (grad.encoder.size() != params.encoder.size() ||
      grad.heads.size() != params.heads.size())
    throw ContractError("sgd_step: gradient layout mismatches params");
  ModelParams next = params;
  for (std::size_t l = 0; l < next.encoder.size(); ++l) {
    if (!grad.encoder[l].weight.same_shape(next.encoder[l].weight))
      throw ContractError("sgd_step: encoder gradient shape mismatch at layer " +
                          std::to_string(l));
    for (std::size_t i = 0; i < next.encoder[l].weight.data.size(); ++i)
      next.encoder[l].weight.data[i] -=
          learning_rate * grad.encoder[l].weight.data[i];
    for (std::size_t i = 0; i < next.encoder[l].bias.size(); ++i)
      next.encoder[l].bias[i] -= learning_rate * grad.encoder[l].bias[i];
  }
  for (std::size_t k = 0; k < next.heads.size(); ++k) {
    if (!grad.heads[k].weight.same_shape(next.heads[k].weight))
      throw ContractError("sgd_step: head gradient shape mismatch at head " +
                          std::to_string(k));
    for (std::size_t i = 0; i < next.heads[k].weight.data.size(); ++i)
      next.heads[k].weight.data[i] -=
          learning_rate * grad.heads[k].weight.data[i];
    for (std::size_t i = 0; i < next.heads[k].bias.size(); ++i)
      next.heads[k].bias[i] -= learning_rate * grad.heads[k].bias[i];
  }
  return next;
}

double pl_alignment(const GradientSet& primary, const EffectiveGradient& eff) {
  if (primary.encoder.size() != eff.encoder.size())
    throw ContractError("pl_alignment: encoder layouts differ");
  double acc = 0.0;
  for (std::size_t l = 0; l < primary.encoder.size(); ++l) {
    const LayerGrads& a = primary.encoder[l];
    const LayerGrads& b = eff.encoder[l];
    if (!a.weight.same_shape(b.weight))
      throw ContractError("pl_alignment: shape mismatch at layer " +
                          std::to_string(l));
    for (std::size_t i = 0; i < a.weight.data.size(); ++i)
      acc += a.weight.data[i] * b.weight.data[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i)
      acc += a.bias[i] * b.bias[i];
  }
  return acc;
}

}  // namespace mt2st
