#include "mt2st/task_suite.hpp"

#include <cmath>
#include <string>

#include "mt2st/errors.hpp"
#include "mt2st/rng.hpp"
#include "mt2st/serialize.hpp"

namespace mt2st {

namespace {

constexpr std::uint64_t kTagSharedMap = 0x73686172ULL;
constexpr std::uint64_t kTagPrivateMap = 0x70726976ULL;
constexpr std::uint64_t kTagReadout = 0x72656164ULL;
constexpr std::uint64_t kTagInputs = 0x696e7074ULL;
constexpr std::uint64_t kTagNoise = 0x6e6f6973ULL;

Tensor2 random_matrix(std::size_t rows, std::size_t cols, double scale,
                      std::uint64_t seed) {
  Tensor2 m(rows, cols);
  Rng rng(seed);
  for (double& v : m.data) v = rng.next_normal() * scale;
  return m;
}

// y = M x for one row of inputs.
std::vector<double> apply_map(const Tensor2& m, const double* x) {
  std::vector<double> y(m.rows, 0.0);
  for (std::size_t o = 0; o < m.rows; ++o) {
    const double* row = &m.data[o * m.cols];
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
    y[o] = acc;
  }
  return y;
}

void validate_spec(const TaskSpec& spec, std::size_t input_dim,
                   const std::string& label) {
  if (spec.output_dim < 1)
    throw ConfigError(label + ": output_dim must be >= 1");
  if (spec.relatedness < 0.0 || spec.relatedness > 1.0)
    throw ConfigError(label + ": relatedness must lie in [0, 1]");
  if (spec.kind == TaskKind::Denoising) {
    if (!spec.denoise)
      throw ConfigError(label + ": denoising task needs a denoise schedule");
    if (spec.output_dim != input_dim)
      throw ConfigError(label +
                        ": denoising task must predict the full frame "
                        "(output_dim == input_dim)");
    if (!(spec.denoise->sigma2_min > 0.0))
      throw ConfigError(label + ": denoise sigma2_min must be > 0");
    if (spec.denoise->sigma2_max < spec.denoise->sigma2_min)
      throw ConfigError(label + ": denoise sigma2_max must be >= sigma2_min");
    if (spec.denoise->steps < 1)
      throw ConfigError(label + ": denoise steps must be >= 1");
  }
}

TaskDataset build_task(const SuiteConfig& config, const TaskSpec& spec,
                       std::size_t task_index, const Tensor2& shared_map,
                       const Tensor2& private_map, const Tensor2& readout) {
  const std::size_t d = config.input_dim;
  const std::size_t n = spec.samples > 0 ? spec.samples : config.samples;
  const double rho = spec.relatedness;

  TaskDataset task;
  task.spec = spec;
  task.spec.samples = n;
  task.inputs = random_matrix(n, d, 1.0,
                              mix_seed(config.seed, kTagInputs, task_index));
  Rng noise_rng(mix_seed(config.seed, kTagNoise, task_index));

  // Blended latent map: rho * shared + (1 - rho) * private.
  Tensor2 blended(shared_map.rows, shared_map.cols);
  for (std::size_t i = 0; i < blended.data.size(); ++i)
    blended.data[i] =
        rho * shared_map.data[i] + (1.0 - rho) * private_map.data[i];

  if (spec.kind == TaskKind::Classification) {
    task.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> latent =
          apply_map(blended, &task.inputs.data[i * d]);
      const std::vector<double> scores = apply_map(readout, latent.data());
      std::size_t best = 0;
      for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = c;
      if (spec.output_dim > 1 && noise_rng.next_unit() < config.label_flip_prob)
        best = (best + 1 + noise_rng.next_index(spec.output_dim - 1)) %
               spec.output_dim;
      task.labels[i] = best;
    }
  } else if (spec.kind == TaskKind::Regression) {
    task.targets = Tensor2(n, spec.output_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> latent =
          apply_map(blended, &task.inputs.data[i * d]);
      const std::vector<double> values = apply_map(readout, latent.data());
      for (std::size_t c = 0; c < spec.output_dim; ++c)
        task.targets.at(i, c) =
            values[c] + noise_rng.next_normal() * config.regression_noise_std;
    }
  } else {
    // Denoising: the dataset holds clean latent-structured frames; noisy
    // inputs and noise targets are drawn per training step.
    Tensor2 clean(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> latent =
          apply_map(blended, &task.inputs.data[i * d]);
      for (std::size_t j = 0; j < d; ++j) clean.at(i, j) = latent[j];
    }
    task.inputs = std::move(clean);
  }

  const std::size_t val_count =
      n >= 2 ? std::min<std::size_t>(
                   n - 1, std::max<std::size_t>(
                              1, static_cast<std::size_t>(std::llround(
                                     config.validation_fraction *
                                     static_cast<double>(n)))))
             : 0;
  const std::size_t train_count = n - val_count;
  task.train_indices.resize(train_count);
  for (std::size_t i = 0; i < train_count; ++i) task.train_indices[i] = i;
  task.val_indices.resize(val_count);
  for (std::size_t i = 0; i < val_count; ++i)
    task.val_indices[i] = train_count + i;
  return task;
}

}  // namespace

double DenoiseSchedule::variance_at(std::size_t t) const {
  if (t > steps)
    throw InputError("denoise step " + std::to_string(t) +
                     " outside schedule range [0, " + std::to_string(steps) +
                     "]");
  const double frac = static_cast<double>(t) / static_cast<double>(steps);
  return sigma2_min + (sigma2_max - sigma2_min) * frac;
}

void validate_suite_config(const SuiteConfig& config) {
  if (config.input_dim < 1)
    throw ConfigError("suite.input_dim: must be >= 1");
  if (config.samples < 1 && config.primary.samples < 1)
    throw ConfigError("suite.samples: must be >= 1");
  if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0))
    throw ConfigError("suite.validation_fraction: must lie in (0, 1)");
  if (config.label_flip_prob < 0.0 || config.label_flip_prob > 1.0)
    throw ConfigError("suite.label_flip_prob: must lie in [0, 1]");
  if (!(config.regression_noise_std >= 0.0))
    throw ConfigError("suite.regression_noise_std: must be >= 0");
  validate_spec(config.primary, config.input_dim, "suite.primary");
  for (std::size_t k = 0; k < config.auxiliaries.size(); ++k)
    validate_spec(config.auxiliaries[k], config.input_dim,
                  "suite.auxiliaries[" + std::to_string(k) + "]");
}

TaskSuite generate_suite(const SuiteConfig& config) {
  validate_suite_config(config);

  const std::size_t d = config.input_dim;
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(d));

  TaskSuite suite;
  suite.seed = config.seed;
  suite.input_dim = d;
  suite.validation_fraction = config.validation_fraction;
  suite.truth.shared_map =
      random_matrix(d, d, map_scale, mix_seed(config.seed, kTagSharedMap, 0));

  const std::size_t task_count = config.auxiliaries.size() + 1;
  for (std::size_t k = 0; k < task_count; ++k) {
    const TaskSpec& spec = k == 0 ? config.primary : config.auxiliaries[k - 1];
    suite.truth.private_maps.push_back(random_matrix(
        d, d, map_scale, mix_seed(config.seed, kTagPrivateMap, k)));
    suite.truth.readouts.push_back(
        random_matrix(spec.output_dim, d, map_scale,
                      mix_seed(config.seed, kTagReadout, k)));
  }

  suite.primary = build_task(config, config.primary, 0, suite.truth.shared_map,
                             suite.truth.private_maps[0],
                             suite.truth.readouts[0]);
  for (std::size_t k = 1; k < task_count; ++k)
    suite.auxiliaries.push_back(
        build_task(config, config.auxiliaries[k - 1], k,
                   suite.truth.shared_map, suite.truth.private_maps[k],
                   suite.truth.readouts[k]));
  return suite;
}

std::pair<Tensor2, Tensor2> denoise_batch(const DenoiseSchedule& schedule,
                                          std::size_t t, const Tensor2& clean,
                                          std::uint64_t seed) {
  const double sigma = std::sqrt(schedule.variance_at(t));
  Rng rng(seed);
  Tensor2 noise(clean.rows, clean.cols);
  Tensor2 noisy(clean.rows, clean.cols);
  for (std::size_t i = 0; i < clean.data.size(); ++i) {
    noise.data[i] = rng.next_normal();
    noisy.data[i] = clean.data[i] + sigma * noise.data[i];
  }
  return {std::move(noisy), std::move(noise)};
}

void write_suite_text(std::ostream& out, const TaskSuite& suite) {
  out << "# mt2st-suite-v1\n";
  out << "# seed " << suite.seed << " input_dim " << suite.input_dim
      << " tasks " << suite.task_count() << " validation_fraction "
      << format_double(suite.validation_fraction) << "\n";
  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    const TaskDataset& task = suite.task(k);
    const char* kind = task.spec.kind == TaskKind::Classification
                           ? "classification"
                           : (task.spec.kind == TaskKind::Regression
                                  ? "regression"
                                  : "denoising");
    out << "# task " << k << " kind " << kind << " output_dim "
        << task.spec.output_dim << " relatedness "
        << format_double(task.spec.relatedness) << " samples "
        << task.inputs.rows << " train " << task.train_indices.size()
        << " val " << task.val_indices.size() << "\n";
    for (std::size_t i = 0; i < task.inputs.rows; ++i) {
      for (std::size_t j = 0; j < task.inputs.cols; ++j) {
        if (j) out << ' ';
        out << format_double(task.inputs.at(i, j));
      }
      out << " |";
      if (task.spec.kind == TaskKind::Classification) {
        out << ' ' << task.labels[i];
      } else if (task.spec.kind == TaskKind::Regression) {
        for (std::size_t c = 0; c < task.targets.cols; ++c)
          out << ' ' << format_double(task.targets.at(i, c));
      }
      out << "\n";
    }
  }
}

}  // namespace mt2st
