#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "mt2st/tensor.hpp"

namespace mt2st {

enum class Activation { Identity, Tanh };

struct LayerParams {
  Tensor2 weight;            // out_dim x in_dim
  std::vector<double> bias;  // out_dim
};

/**
 * Shared-encoder / multi-head MLP. The encoder is a stack of dense layers
 * with a pointwise activation; each task owns one linear head over the
 * encoder output. Head 0 is always the primary task.
 */
struct ModelParams {
  std::vector<LayerParams> encoder;
  std::vector<LayerParams> heads;  // K + 1 entries, index 0 = primary
  Activation activation = Activation::Tanh;

  std::size_t input_dim() const;
  std::size_t encoder_output_dim() const;
  std::size_t task_count() const { return heads.size(); }
};

struct ModelConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> encoder_dims;  // output width of each encoder layer
  Activation activation = Activation::Tanh;
};

// Seeded init: weights ~ N(0, 1/fan_in), biases zero.
ModelParams init_model_params(const ModelConfig& cfg,
                              const std::vector<std::size_t>& head_dims,
                              std::uint64_t seed);

// Checks layer dimension chaining; throws ShapeError naming the bad layer.
void validate_model(const ModelParams& params);

struct LayerGrads {
  Tensor2 weight;
  std::vector<double> bias;
};

// Gradients of one task's loss w.r.t. all parameters. Head slots belonging
// to other tasks are present but exactly zero.
struct GradientSet {
  std::vector<LayerGrads> encoder;
  std::vector<LayerGrads> heads;
  std::size_t task_index = 0;
};

struct ForwardCache {
  std::vector<Tensor2> preacts;       // Z_l for each encoder layer
  std::vector<Tensor2> activations;   // A_0 = input, A_l = act(Z_l)
  std::vector<double> pooled;         // column mean of the encoder output
  std::vector<Tensor2> head_outputs;  // raw logits / predictions per head
  std::size_t batch = 0;

  const Tensor2& encoder_output() const { return activations.back(); }
};

using ClassLabels = std::vector<std::size_t>;

// Classification tasks carry integer labels, regression/denoising tasks a
// target matrix of the head's output shape.
using TargetBatch = std::variant<ClassLabels, Tensor2>;

ForwardCache forward(const ModelParams& params, const Tensor2& batch_inputs);

// Cross-entropy (softmax) for label targets, mean squared error over batch
// and output dims for tensor targets. Always >= 0.
double task_loss(const ForwardCache& cache, std::size_t task_index,
                 const TargetBatch& targets);

// Exact analytic gradients of task_loss for one task.
GradientSet backward(const ModelParams& params, const ForwardCache& cache,
                     std::size_t task_index, const TargetBatch& targets);

/**
 * FLOPs for one optimisation step on a single task: forward plus backward of
 * the encoder and that task's head. Counts matrix-product MACs only, at
 * 2 FLOPs per MAC, with backward costed at twice the forward.
 */
std::uint64_t flops_per_task_step(const ModelParams& params, std::size_t batch,
                                  std::size_t task_index);

// L2 norm over the encoder part of a gradient set (weights and biases).
double encoder_grad_norm(const GradientSet& grads);

}  // namespace mt2st
