#include "mt2st/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "mt2st/errors.hpp"
#include "mt2st/rng.hpp"

namespace mt2st {

namespace {

constexpr std::uint64_t kTagStepNoise = 0x73746570ULL;
constexpr std::uint64_t kTagEvalNoise = 0x6576616cULL;

Tensor2 gather_rows(const Tensor2& src, const std::vector<std::size_t>& index,
                    std::size_t first, std::size_t count) {
  Tensor2 out(count, src.cols);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t row = index[(first + i) % index.size()];
    for (std::size_t j = 0; j < src.cols; ++j)
      out.at(i, j) = src.at(row, j);
  }
  return out;
}

// Training steps walk the denoise schedule once and then stay at its end.
std::size_t denoise_train_step(const DenoiseSchedule& schedule, std::size_t t) {
  return std::min(t, schedule.steps);
}

struct TaskBatch {
  Tensor2 inputs;
  TargetBatch targets;
};

// Batch selection is a pure function of the absolute step index, so a run
// can be resumed bit-exactly from any step.
TaskBatch make_train_batch(const TaskDataset& task, std::size_t task_index,
                           std::size_t t, std::size_t batch_size,
                           std::uint64_t run_seed) {
  const std::vector<std::size_t>& idx = task.train_indices;
  if (idx.empty())
    throw ConfigError("task " + std::to_string(task_index) +
                      " has an empty training split");
  const std::size_t first = (t * batch_size) % idx.size();
  TaskBatch batch;
  if (task.spec.kind == TaskKind::Denoising) {
    Tensor2 clean = gather_rows(task.inputs, idx, first, batch_size);
    auto [noisy, noise] = denoise_batch(
        *task.spec.denoise, denoise_train_step(*task.spec.denoise, t), clean,
        mix_seed(run_seed, kTagStepNoise, t, task_index));
    batch.inputs = std::move(noisy);
    batch.targets = std::move(noise);
    return batch;
  }
  batch.inputs = gather_rows(task.inputs, idx, first, batch_size);
  if (task.spec.kind == TaskKind::Classification) {
    ClassLabels labels(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i)
      labels[i] = task.labels[idx[(first + i) % idx.size()]];
    batch.targets = std::move(labels);
  } else {
    batch.targets = gather_rows(task.targets, idx, first, batch_size);
  }
  return batch;
}

TaskBatch make_eval_batch(const TaskSuite& suite, std::size_t task_index,
                          Split split) {
  const TaskDataset& task = suite.task(task_index);
  const std::vector<std::size_t>& idx =
      split == Split::Train ? task.train_indices : task.val_indices;
  if (idx.empty())
    throw InputError("evaluate: requested split is empty for task " +
                     std::to_string(task_index));
  TaskBatch batch;
  if (task.spec.kind == TaskKind::Denoising) {
    Tensor2 clean = gather_rows(task.inputs, idx, 0, idx.size());
    // Fixed mid-schedule noise draw keeps evaluation deterministic.
    const std::size_t tau = task.spec.denoise->steps / 2;
    auto [noisy, noise] = denoise_batch(
        *task.spec.denoise, tau, clean,
        mix_seed(suite.seed, kTagEvalNoise, task_index,
                 split == Split::Train ? 0 : 1));
    batch.inputs = std::move(noisy);
    batch.targets = std::move(noise);
    return batch;
  }
  batch.inputs = gather_rows(task.inputs, idx, 0, idx.size());
  if (task.spec.kind == TaskKind::Classification) {
    ClassLabels labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = task.labels[idx[i]];
    batch.targets = std::move(labels);
  } else {
    batch.targets = gather_rows(task.targets, idx, 0, idx.size());
  }
  return batch;
}

TaskMetrics metrics_for(const ModelParams& params, const TaskBatch& batch,
                        std::size_t task_index, TaskKind kind) {
  const ForwardCache cache = forward(params, batch.inputs);
  TaskMetrics metrics;
  metrics.loss = task_loss(cache, task_index, batch.targets);
  if (kind == TaskKind::Classification) {
    const Tensor2& logits = cache.head_outputs[task_index];
    const ClassLabels& labels = std::get<ClassLabels>(batch.targets);
    std::size_t hits = 0;
    for (std::size_t b = 0; b < logits.rows; ++b) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.cols; ++c)
        if (logits.at(b, c) > logits.at(b, best)) best = c;
      if (best == labels[b]) ++hits;
    }
    metrics.accuracy =
        static_cast<double>(hits) / static_cast<double>(logits.rows);
  }
  return metrics;
}

NoiseVarianceProvider make_suite_variance_provider(const TaskSuite& suite) {
  std::vector<DenoiseSchedule> schedules;
  for (std::size_t k = 0; k < suite.aux_count(); ++k) {
    const TaskSpec& spec = suite.auxiliaries[k].spec;
    if (!spec.denoise)
      throw ConfigError(
          "variance schedule needs a denoise schedule on auxiliary task " +
          std::to_string(k + 1));
    schedules.push_back(*spec.denoise);
  }
  return [schedules](std::size_t t) {
    std::vector<double> variances(schedules.size());
    for (std::size_t k = 0; k < schedules.size(); ++k)
      variances[k] =
          schedules[k].variance_at(denoise_train_step(schedules[k], t));
    return variances;
  };
}

double mean_of(const std::vector<double>& values, std::size_t first,
               std::size_t count) {
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += values[first + i];
  return sum / static_cast<double>(count);
}

}  // namespace

RunResult train(const TaskSuite& suite, const ModelConfig& model,
                const TaskWeightSchedule& schedule, const TrainConfig& cfg,
                const FeedbackPolicy& feedback, const CostModel& cost,
                const TrainOptions& options) {
  const std::size_t aux_count = suite.aux_count();
  if (!(cfg.learning_rate > 0.0))
    throw ConfigError("train: learning_rate must be > 0");
  if (cfg.total_steps < 1) throw ConfigError("train: total_steps must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (model.input_dim != suite.input_dim)
    throw ConfigError("train: model input_dim " +
                      std::to_string(model.input_dim) +
                      " does not match suite input_dim " +
                      std::to_string(suite.input_dim));
  if (feedback.enabled) {
    if (feedback.window < 2)
      throw ConfigError("feedback window must be >= 2");
    if (!(feedback.min_relative_improvement >= 0.0))
      throw ConfigError("feedback threshold must be >= 0");
  }
  validate_schedule(schedule, aux_count);
  if (cost.c_marginal.size() != aux_count)
    throw ConfigError("cost model has " +
                      std::to_string(cost.c_marginal.size()) +
                      " marginal costs, suite has " +
                      std::to_string(aux_count) + " auxiliaries");

  std::vector<std::size_t> head_dims;
  for (std::size_t k = 0; k < suite.task_count(); ++k)
    head_dims.push_back(suite.task(k).spec.output_dim);

  ModelParams params = options.initial_params
                           ? *options.initial_params
                           : init_model_params(model, head_dims, cfg.seed);
  validate_model(params);
  for (std::size_t k = 0; k < head_dims.size(); ++k) {
    if (params.heads[k].weight.rows != head_dims[k])
      throw ConfigError("train: head " + std::to_string(k) + " emits " +
                        std::to_string(params.heads[k].weight.rows) +
                        " outputs, task expects " +
                        std::to_string(head_dims[k]));
  }

  NoiseVarianceProvider variance_provider;
  if (std::holds_alternative<VarianceSchedule>(schedule))
    variance_provider = make_suite_variance_provider(suite);

  const std::size_t primary_train = suite.primary.train_indices.size();
  if (primary_train == 0)
    throw ConfigError("train: primary task has an empty training split");
  const std::size_t steps_per_epoch =
      (primary_train + cfg.batch_size - 1) / cfg.batch_size;

  // Fixed validation batch for plateau detection and epoch bookkeeping.
  const TaskBatch primary_val = make_eval_batch(suite, 0, Split::Validation);

  std::vector<double> fisher_ema(aux_count, 0.0);
  bool fisher_ema_ready = false;
  bool warned_degenerate = false;
  std::optional<std::size_t> forced_switch;
  std::vector<double> val_history;
  std::vector<double> epoch_val_losses;

  RunResult result;
  result.records.reserve(cfg.total_steps);
  double flops_expected = 0.0;
  double flops_realized = 0.0;

  std::vector<GradientSet> grads(suite.task_count());
  std::vector<double> losses(suite.task_count());
  std::vector<double> enc_norms(suite.task_count());

  for (std::size_t i = 0; i < cfg.total_steps; ++i) {
    const auto step_start = std::chrono::steady_clock::now();
    const std::size_t t = options.start_step + i;

    for (std::size_t k = 0; k < suite.task_count(); ++k) {
      const TaskBatch batch = make_train_batch(suite.task(k), k, t,
                                               cfg.batch_size, cfg.seed);
      const ForwardCache cache = forward(params, batch.inputs);
      losses[k] = task_loss(cache, k, batch.targets);
      if (!std::isfinite(losses[k]))
        throw NumericError("non-finite loss at step " + std::to_string(t) +
                           " task " + std::to_string(k));
      grads[k] = backward(params, cache, k, batch.targets);
      enc_norms[k] = encoder_grad_norm(grads[k]);
    }

    // Schedule weights for this step.
    std::vector<double> gammas(aux_count, 0.0);
    if (const auto* dim = std::get_if<DiminishSchedule>(&schedule)) {
      for (std::size_t k = 0; k < aux_count; ++k)
        gammas[k] = gamma_diminish(t, dim->per_task[k]);
    } else if (const auto* sw = std::get_if<SwitchSchedule>(&schedule)) {
      const double g = gamma_switch(t, sw->params);
      std::fill(gammas.begin(), gammas.end(), g);
    } else if (const auto* fixed = std::get_if<FixedMtlSchedule>(&schedule)) {
      gammas = fixed->gammas;
    } else if (const auto* gn = std::get_if<GradNormSchedule>(&schedule)) {
      const AdaptiveWeights w = gamma_gradnorm(
          enc_norms[0], std::span<const double>(enc_norms).subspan(1),
          gn->params);
      if (w.fallback == AdaptiveFallback::PrimaryConverged &&
          !warned_degenerate) {
        warned_degenerate = true;
        std::fprintf(stderr,
                     "mt2st[warn] schedule=grad_norm step=%zu primary "
                     "gradient vanished; auxiliary weights set to zero\n",
                     t);
      }
      gammas = w.gamma;
    } else if (const auto* fi = std::get_if<FisherSchedule>(&schedule)) {
      for (std::size_t k = 0; k < aux_count; ++k) {
        const double trace = estimate_fisher_trace(grads[k + 1]).trace;
        fisher_ema[k] =
            fisher_ema_ready ? 0.9 * fisher_ema[k] + 0.1 * trace : trace;
      }
      fisher_ema_ready = true;
      std::vector<FisherEstimate> traces(aux_count);
      for (std::size_t k = 0; k < aux_count; ++k)
        traces[k].trace = fisher_ema[k];
      const AdaptiveWeights w = gamma_fisher(traces, fi->params);
      if (w.fallback == AdaptiveFallback::UniformTraces && !warned_degenerate) {
        warned_degenerate = true;
        std::fprintf(stderr,
                     "mt2st[warn] schedule=fisher step=%zu all Fisher traces "
                     "zero; using uniform lambda/K weights\n",
                     t);
      }
      gammas = w.gamma;
    } else if (const auto* var = std::get_if<VarianceSchedule>(&schedule)) {
      gammas = gamma_variance(t, variance_provider, var->params).gamma;
    }

    // Plateau feedback: once the windowed validation improvement stalls
    // during the multi-task phase, force the transition to single-task.
    if (!forced_switch && feedback.enabled &&
        val_history.size() >= 2 * feedback.window) {
      const std::size_t w = feedback.window;
      const double ma_now = mean_of(val_history, val_history.size() - w, w);
      const double ma_prev =
          mean_of(val_history, val_history.size() - 2 * w, w);
      const double rel =
          (ma_prev - ma_now) / std::max(ma_prev, 1e-300);
      bool mtl_phase = false;
      for (double g : gammas) mtl_phase = mtl_phase || g > 0.0;
      if (mtl_phase && rel < feedback.min_relative_improvement)
        forced_switch = t;
    }
    if (forced_switch) std::fill(gammas.begin(), gammas.end(), 0.0);

    const EffectiveGradient eff = combine(
        grads[0], std::span<const GradientSet>(grads).subspan(1), gammas);
    const double alignment = pl_alignment(grads[0], eff);
    params = sgd_step(params, eff, cfg.learning_rate);

    double step_expected = cost.c_stl;
    double step_realized = cost.c_stl;
    for (std::size_t k = 0; k < aux_count; ++k) {
      step_expected += gammas[k] * cost.c_marginal[k];
      if (gammas[k] > 0.0) step_realized += cost.c_marginal[k];
    }
    flops_expected += step_expected;
    flops_realized += step_realized;

    if (feedback.enabled) {
      val_history.push_back(
          metrics_for(params, primary_val, 0, suite.primary.spec.kind).loss);
    }
    const bool epoch_end = (i + 1) % steps_per_epoch == 0;
    if (epoch_end || i + 1 == cfg.total_steps) {
      epoch_val_losses.push_back(
          metrics_for(params, primary_val, 0, suite.primary.spec.kind).loss);
    }

    StepRecord record;
    record.step = t;
    record.losses = losses;
    record.gammas = gammas;
    record.encoder_grad_norms = enc_norms;
    record.alignment = alignment;
    record.flops_expected = flops_expected;
    record.flops_realized = flops_realized;
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - step_start)
                         .count();
    result.records.push_back(std::move(record));
  }

  result.final_params = std::move(params);
  result.validation_metrics =
      evaluate(result.final_params, suite, Split::Validation);

  const double final_val_loss = result.validation_metrics[0].loss;
  for (std::size_t e = 0; e < epoch_val_losses.size(); ++e) {
    if (epoch_val_losses[e] <= 1.01 * final_val_loss + 1e-15) {
      result.convergence_epoch = e + 1;
      break;
    }
  }

  if (forced_switch) {
    result.switch_step_effective = forced_switch;
  } else if (const auto* sw = std::get_if<SwitchSchedule>(&schedule)) {
    const std::size_t end_step = options.start_step + cfg.total_steps;
    if (sw->params.t_switch < end_step)
      result.switch_step_effective = sw->params.t_switch;
  }
  return result;
}

std::vector<TaskMetrics> evaluate(const ModelParams& params,
                                  const TaskSuite& suite, Split split) {
  validate_model(params);
  if (params.heads.size() != suite.task_count())
    throw ContractError("evaluate: model has " +
                        std::to_string(params.heads.size()) +
                        " heads, suite has " +
                        std::to_string(suite.task_count()) + " tasks");
  std::vector<TaskMetrics> metrics;
  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    const TaskBatch batch = make_eval_batch(suite, k, split);
    metrics.push_back(metrics_for(params, batch, k, suite.task(k).spec.kind));
  }
  return metrics;
}

}  // namespace mt2st
