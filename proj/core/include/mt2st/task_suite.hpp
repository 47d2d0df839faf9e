#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "mt2st/model.hpp"
#include "mt2st/tensor.hpp"

namespace mt2st {

enum class TaskKind { Classification, Regression, Denoising };

// Linear noise ramp sigma^2(t) = min + (max - min) * t / steps.
struct DenoiseSchedule {
  std::size_t steps = 1;
  double sigma2_min = 1e-4;
  double sigma2_max = 1.0;

  double variance_at(std::size_t t) const;
};

struct TaskSpec {
  TaskKind kind = TaskKind::Classification;
  std::size_t output_dim = 2;
  double relatedness = 1.0;  // rho in [0, 1]: share of the common latent map
  std::size_t samples = 0;   // 0 = inherit the suite default
  std::optional<DenoiseSchedule> denoise;  // required for Denoising tasks
};

struct TaskDataset {
  TaskSpec spec;
  Tensor2 inputs;   // samples x input_dim (clean frames for denoising)
  ClassLabels labels;  // classification targets
  Tensor2 targets;     // regression targets
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

// The generating process, kept so tests can plant exact solutions.
struct SuiteGroundTruth {
  Tensor2 shared_map;                 // G: latent_dim x input_dim
  std::vector<Tensor2> private_maps;  // per task, primary first
  std::vector<Tensor2> readouts;      // per task, output_dim x latent_dim
};

struct TaskSuite {
  std::uint64_t seed = 0;
  std::size_t input_dim = 0;
  double validation_fraction = 0.2;
  TaskDataset primary;
  std::vector<TaskDataset> auxiliaries;
  SuiteGroundTruth truth;

  std::size_t aux_count() const { return auxiliaries.size(); }
  const TaskDataset& task(std::size_t k) const {
    return k == 0 ? primary : auxiliaries[k - 1];
  }
  std::size_t task_count() const { return auxiliaries.size() + 1; }
};

struct SuiteConfig {
  std::uint64_t seed = 0;
  std::size_t input_dim = 8;
  std::size_t samples = 256;  // default per-task sample count
  double validation_fraction = 0.2;
  double label_flip_prob = 0.05;     // classification label noise
  double regression_noise_std = 0.1;  // additive target noise
  TaskSpec primary;
  std::vector<TaskSpec> auxiliaries;
};

// Field-level checks; throws ConfigError naming the offending field.
void validate_suite_config(const SuiteConfig& config);

/**
 * Seeded synthetic multi-task generator. All tasks share one latent linear
 * map G; task k draws targets through rho_k * G + (1 - rho_k) * G_private,
 * so relatedness is a dial from fully shared structure (rho = 1) to
 * statistically unrelated tasks (rho = 0). Pure function of its config.
 */
TaskSuite generate_suite(const SuiteConfig& config);

// Adds sqrt(sigma^2(t)) * eps to the clean batch and returns (noisy, eps).
std::pair<Tensor2, Tensor2> denoise_batch(const DenoiseSchedule& schedule,
                                          std::size_t t, const Tensor2& clean,
                                          std::uint64_t seed);

// Columnar text dump (header with dims/counts/seed, then feature and target
// rows per task) for external inspection.
void write_suite_text(std::ostream& out, const TaskSuite& suite);

}  // namespace mt2st
