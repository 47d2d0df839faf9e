#include "mt2st/model.hpp"

#include <cmath>
#include <string>

#include "mt2st/errors.hpp"
#include "mt2st/rng.hpp"

namespace mt2st {

namespace {

// out(b, o) = sum_j in(b, j) * w(o, j) + bias[o]
Tensor2 linear_forward(const Tensor2& in, const LayerParams& layer) {
  const std::size_t batch = in.rows;
  const std::size_t out_dim = layer.weight.rows;
  const std::size_t in_dim = layer.weight.cols;
  Tensor2 out(batch, out_dim);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = &in.data[b * in_dim];
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* w = &layer.weight.data[o * in_dim];
      double acc = layer.bias[o];
      for (std::size_t j = 0; j < in_dim; ++j) acc += row[j] * w[j];
      out.at(b, o) = acc;
    }
  }
  return out;
}

double activate(double z, Activation act) {
  return act == Activation::Tanh ? std::tanh(z) : z;
}

// Derivative expressed through the activation value a = act(z).
double activate_grad(double a, Activation act) {
  return act == Activation::Tanh ? 1.0 - a * a : 1.0;
}

void check_layer_dims(const ModelParams& params) {
  std::size_t dim = params.input_dim();
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const LayerParams& layer = params.encoder[l];
    if (layer.weight.cols != dim) {
      throw ShapeError("encoder layer " + std::to_string(l) + " expects input dim " +
                       std::to_string(layer.weight.cols) + ", got " +
                       std::to_string(dim));
    }
    if (layer.bias.size() != layer.weight.rows) {
      throw ShapeError("encoder layer " + std::to_string(l) +
                       " bias size mismatches weight rows");
    }
    dim = layer.weight.rows;
  }
  for (std::size_t k = 0; k < params.heads.size(); ++k) {
    const LayerParams& head = params.heads[k];
    if (head.weight.cols != dim) {
      throw ShapeError("head " + std::to_string(k) + " expects input dim " +
                       std::to_string(head.weight.cols) + ", got " +
                       std::to_string(dim));
    }
    if (head.bias.size() != head.weight.rows) {
      throw ShapeError("head " + std::to_string(k) +
                       " bias size mismatches weight rows");
    }
  }
}

LayerGrads zero_grads_like(const LayerParams& layer) {
  LayerGrads g;
  g.weight = Tensor2::zeros(layer.weight.rows, layer.weight.cols);
  g.bias.assign(layer.bias.size(), 0.0);
  return g;
}

// dlogits has the head-output shape for the selected task.
void softmax_ce_grad(const Tensor2& logits, const ClassLabels& labels,
                     Tensor2& dlogits) {
  const std::size_t batch = logits.rows;
  const std::size_t classes = logits.cols;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    double max_logit = logits.at(b, 0);
    for (std::size_t c = 1; c < classes; ++c)
      max_logit = std::max(max_logit, logits.at(b, c));
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c)
      denom += std::exp(logits.at(b, c) - max_logit);
    for (std::size_t c = 0; c < classes; ++c) {
      double p = std::exp(logits.at(b, c) - max_logit) / denom;
      dlogits.at(b, c) = (p - (labels[b] == c ? 1.0 : 0.0)) * inv_batch;
    }
  }
}

}  // namespace

std::size_t ModelParams::input_dim() const {
  if (!encoder.empty()) return encoder.front().weight.cols;
  if (!heads.empty()) return heads.front().weight.cols;
  return 0;
}

std::size_t ModelParams::encoder_output_dim() const {
  return encoder.empty() ? input_dim() : encoder.back().weight.rows;
}

ModelParams init_model_params(const ModelConfig& cfg,
                              const std::vector<std::size_t>& head_dims,
                              std::uint64_t seed) {
  if (cfg.input_dim == 0) throw ConfigError("model input_dim must be >= 1");
  if (head_dims.empty()) throw ConfigError("model needs at least one head");
  ModelParams params;
  params.activation = cfg.activation;
  std::size_t in_dim = cfg.input_dim;
  for (std::size_t l = 0; l < cfg.encoder_dims.size(); ++l) {
    const std::size_t out_dim = cfg.encoder_dims[l];
    if (out_dim == 0)
      throw ConfigError("encoder layer " + std::to_string(l) + " has dim 0");
    Rng rng(mix_seed(seed, 0x656e63ULL, l));
    LayerParams layer;
    layer.weight = Tensor2(out_dim, in_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& w : layer.weight.data) w = rng.next_normal() * scale;
    layer.bias.assign(out_dim, 0.0);
    params.encoder.push_back(std::move(layer));
    in_dim = out_dim;
  }
  for (std::size_t k = 0; k < head_dims.size(); ++k) {
    if (head_dims[k] == 0)
      throw ConfigError("head " + std::to_string(k) + " has dim 0");
    Rng rng(mix_seed(seed, 0x686424ULL, k));
    LayerParams head;
    head.weight = Tensor2(head_dims[k], in_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& w : head.weight.data) w = rng.next_normal() * scale;
    head.bias.assign(head_dims[k], 0.0);
    params.heads.push_back(std::move(head));
  }
  return params;
}

void validate_model(const ModelParams& params) {
  if (params.heads.empty()) throw ShapeError("model has no task heads");
  check_layer_dims(params);
}

ForwardCache forward(const ModelParams& params, const Tensor2& batch_inputs) {
  check_layer_dims(params);
  if (batch_inputs.cols != params.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch_inputs.cols) +
                     " features, model expects " +
                     std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.batch = batch_inputs.rows;
  cache.activations.push_back(batch_inputs);
  for (const LayerParams& layer : params.encoder) {
    Tensor2 z = linear_forward(cache.activations.back(), layer);
    Tensor2 a(z.rows, z.cols);
    for (std::size_t i = 0; i < z.data.size(); ++i)
      a.data[i] = activate(z.data[i], params.activation);
    cache.preacts.push_back(std::move(z));
    cache.activations.push_back(std::move(a));
  }
  const Tensor2& hidden = cache.activations.back();
  cache.pooled.assign(hidden.cols, 0.0);
  if (hidden.rows > 0) {
    for (std::size_t b = 0; b < hidden.rows; ++b)
      for (std::size_t j = 0; j < hidden.cols; ++j)
        cache.pooled[j] += hidden.at(b, j);
    for (double& v : cache.pooled) v /= static_cast<double>(hidden.rows);
  }
  for (const LayerParams& head : params.heads)
    cache.head_outputs.push_back(linear_forward(hidden, head));
  return cache;
}

double task_loss(const ForwardCache& cache, std::size_t task_index,
                 const TargetBatch& targets) {
  if (task_index >= cache.head_outputs.size())
    throw InputError("task index " + std::to_string(task_index) +
                     " out of range");
  const Tensor2& outputs = cache.head_outputs[task_index];
  if (const auto* labels = std::get_if<ClassLabels>(&targets)) {
    if (labels->size() != outputs.rows)
      throw InputError("label batch size mismatch");
    double total = 0.0;
    for (std::size_t b = 0; b < outputs.rows; ++b) {
      const std::size_t label = (*labels)[b];
      if (label >= outputs.cols)
        throw InputError("label " + std::to_string(label) +
                         " out of range for head with " +
                         std::to_string(outputs.cols) + " classes");
      double max_logit = outputs.at(b, 0);
      for (std::size_t c = 1; c < outputs.cols; ++c)
        max_logit = std::max(max_logit, outputs.at(b, c));
      double denom = 0.0;
      for (std::size_t c = 0; c < outputs.cols; ++c)
        denom += std::exp(outputs.at(b, c) - max_logit);
      total += max_logit + std::log(denom) - outputs.at(b, label);
    }
    return total / static_cast<double>(outputs.rows);
  }
  const Tensor2& values = std::get<Tensor2>(targets);
  if (!values.same_shape(outputs))
    throw InputError("regression target shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < outputs.data.size(); ++i) {
    const double diff = outputs.data[i] - values.data[i];
    total += diff * diff;
  }
  return total / static_cast<double>(outputs.data.size());
}

GradientSet backward(const ModelParams& params, const ForwardCache& cache,
                     std::size_t task_index, const TargetBatch& targets) {
  if (task_index >= params.heads.size())
    throw InputError("task index " + std::to_string(task_index) +
                     " out of range");
  // Stale-cache guard: the cache must have been produced by forward() on
  // these params and this batch.
  if (cache.head_outputs.size() != params.heads.size() ||
      cache.preacts.size() != params.encoder.size())
    throw ContractError("forward cache does not match model layout");
  for (std::size_t k = 0; k < params.heads.size(); ++k) {
    if (cache.head_outputs[k].cols != params.heads[k].weight.rows)
      throw ContractError("forward cache is stale for head " +
                          std::to_string(k));
  }
  if (cache.activations.back().cols != params.encoder_output_dim())
    throw ContractError("forward cache encoder width mismatches params");

  const Tensor2& outputs = cache.head_outputs[task_index];
  const std::size_t batch = outputs.rows;

  GradientSet grads;
  grads.task_index = task_index;
  for (const LayerParams& layer : params.encoder)
    grads.encoder.push_back(zero_grads_like(layer));
  for (const LayerParams& head : params.heads)
    grads.heads.push_back(zero_grads_like(head));

  Tensor2 dlogits(outputs.rows, outputs.cols);
  if (const auto* labels = std::get_if<ClassLabels>(&targets)) {
    if (labels->size() != batch) throw InputError("label batch size mismatch");
    for (std::size_t b = 0; b < batch; ++b) {
      if ((*labels)[b] >= outputs.cols)
        throw InputError("label " + std::to_string((*labels)[b]) +
                         " out of range for head with " +
                         std::to_string(outputs.cols) + " classes");
    }
    softmax_ce_grad(outputs, *labels, dlogits);
  } else {
    const Tensor2& values = std::get<Tensor2>(targets);
    if (!values.same_shape(outputs))
      throw InputError("regression target shape mismatch");
    const double scale = 2.0 / static_cast<double>(outputs.data.size());
    for (std::size_t i = 0; i < outputs.data.size(); ++i)
      dlogits.data[i] = scale * (outputs.data[i] - values.data[i]);
  }

  // Head layer: dW = dlogits^T * H, db = column sums, dH = dlogits * W.
  const Tensor2& hidden = cache.activations.back();
  const LayerParams& head = params.heads[task_index];
  LayerGrads& head_grads = grads.heads[task_index];
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < outputs.cols; ++o) {
      const double d = dlogits.at(b, o);
      head_grads.bias[o] += d;
      double* wrow = &head_grads.weight.data[o * hidden.cols];
      const double* hrow = &hidden.data[b * hidden.cols];
      for (std::size_t j = 0; j < hidden.cols; ++j) wrow[j] += d * hrow[j];
    }
  }
  Tensor2 dhidden(batch, hidden.cols);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < hidden.cols; ++j) {
      double acc = 0.0;
      for (std::size_t o = 0; o < outputs.cols; ++o)
        acc += dlogits.at(b, o) * head.weight.at(o, j);
      dhidden.at(b, j) = acc;
    }
  }

  // Encoder layers, last to first.
  for (std::size_t li = params.encoder.size(); li-- > 0;) {
    const LayerParams& layer = params.encoder[li];
    const Tensor2& act = cache.activations[li + 1];
    const Tensor2& prev = cache.activations[li];
    Tensor2 dz(batch, act.cols);
    for (std::size_t i = 0; i < dz.data.size(); ++i)
      dz.data[i] =
          dhidden.data[i] * activate_grad(act.data[i], params.activation);
    LayerGrads& lg = grads.encoder[li];
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < act.cols; ++o) {
        const double d = dz.at(b, o);
        lg.bias[o] += d;
        double* wrow = &lg.weight.data[o * prev.cols];
        const double* prow = &prev.data[b * prev.cols];
        for (std::size_t j = 0; j < prev.cols; ++j) wrow[j] += d * prow[j];
      }
    }
    if (li > 0) {
      Tensor2 dprev(batch, prev.cols);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < prev.cols; ++j) {
          double acc = 0.0;
          for (std::size_t o = 0; o < act.cols; ++o)
            acc += dz.at(b, o) * layer.weight.at(o, j);
          dprev.at(b, j) = acc;
        }
      }
      dhidden = std::move(dprev);
    }
  }
  return grads;
}

std::uint64_t flops_per_task_step(const ModelParams& params, std::size_t batch,
                                  std::size_t task_index) {
  if (task_index >= params.heads.size())
    throw InputError("task index " + std::to_string(task_index) +
                     " out of range");
  std::uint64_t encoder_macs = 0;
  for (const LayerParams& layer : params.encoder)
    encoder_macs += static_cast<std::uint64_t>(layer.weight.rows) *
                    layer.weight.cols;
  const LayerParams& head = params.heads[task_index];
  const std::uint64_t head_macs =
      static_cast<std::uint64_t>(head.weight.rows) * head.weight.cols;
  // Forward MACs plus backward at twice forward, two FLOPs per MAC.
  return 6ULL * static_cast<std::uint64_t>(batch) * (encoder_macs + head_macs);
}

double encoder_grad_norm(const GradientSet& grads) {
  double sum = 0.0;
  for (const LayerGrads& layer : grads.encoder) {
    for (double v : layer.weight.data) sum += v * v;
    for (double v : layer.bias) sum += v * v;
  }
  return std::sqrt(sum);
}

}  // namespace mt2st
