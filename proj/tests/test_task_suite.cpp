#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mt2st/errors.hpp"
#include "mt2st/optimizer.hpp"
#include "mt2st/task_suite.hpp"
#include "mt2st/trainer.hpp"
#include "test_helpers.hpp"

using namespace mt2st;

namespace {

SuiteConfig base_config(std::uint64_t seed) {
  SuiteConfig cfg;
  cfg.seed = seed;
  cfg.input_dim = 8;
  cfg.samples = 200;
  cfg.primary = TaskSpec{TaskKind::Classification, 4, 1.0, 0, {}};
  cfg.auxiliaries = {TaskSpec{TaskKind::Classification, 4, 0.9, 0, {}},
                     TaskSpec{TaskKind::Regression, 3, 0.9, 0, {}}};
  return cfg;
}

std::vector<double> latent_of(const Tensor2& map, const Tensor2& inputs,
                              std::size_t row) {
  std::vector<double> out(map.rows, 0.0);
  for (std::size_t o = 0; o < map.rows; ++o)
    for (std::size_t j = 0; j < map.cols; ++j)
      out[o] += map.at(o, j) * inputs.at(row, j);
  return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_SUITE("task_suite") {

TEST_CASE("generation is a pure function of the seed") {
  const TaskSuite a = generate_suite(base_config(42));
  const TaskSuite b = generate_suite(base_config(42));
  const TaskSuite c = generate_suite(base_config(43));
  CHECK(bitwise_equal(a.primary.inputs, b.primary.inputs));
  CHECK(a.primary.labels == b.primary.labels);
  CHECK(bitwise_equal(a.auxiliaries[1].targets, b.auxiliaries[1].targets));
  CHECK(bitwise_equal(a.truth.shared_map, b.truth.shared_map));
  CHECK(!bitwise_equal(a.primary.inputs, c.primary.inputs));
}

TEST_CASE("train and validation splits are disjoint and cover the data") {
  const TaskSuite suite = generate_suite(base_config(7));
  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    const TaskDataset& task = suite.task(k);
    std::set<std::size_t> seen(task.train_indices.begin(),
                               task.train_indices.end());
    const std::size_t train_count = seen.size();
    CHECK(train_count == task.train_indices.size());
    for (std::size_t idx : task.val_indices) CHECK(seen.insert(idx).second);
    CHECK(seen.size() == task.inputs.rows);
    CHECK(*seen.rbegin() == task.inputs.rows - 1);
  }
}

TEST_CASE("rho = 1 with no label noise makes targets exact functions of Gx") {
  SuiteConfig cfg = base_config(11);
  cfg.label_flip_prob = 0.0;
  cfg.regression_noise_std = 0.0;
  for (auto& spec : cfg.auxiliaries) spec.relatedness = 1.0;
  const TaskSuite suite = generate_suite(cfg);

  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    const TaskDataset& task = suite.task(k);
    for (std::size_t i = 0; i < task.inputs.rows; ++i) {
      // With rho = 1 the blended map IS the shared map.
      const std::vector<double> latent =
          latent_of(suite.truth.shared_map, task.inputs, i);
      std::vector<double> scores(task.spec.output_dim, 0.0);
      for (std::size_t c = 0; c < scores.size(); ++c)
        for (std::size_t j = 0; j < latent.size(); ++j)
          scores[c] += suite.truth.readouts[k].at(c, j) * latent[j];
      if (task.spec.kind == TaskKind::Classification) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < scores.size(); ++c)
          if (scores[c] > scores[best]) best = c;
        CHECK(task.labels[i] == best);
      } else {
        for (std::size_t c = 0; c < scores.size(); ++c)
          CHECK(task.targets.at(i, c) ==
                doctest::Approx(scores[c]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("rho = 0 auxiliary targets decorrelate from the primary latent") {
  // Monte-Carlo oracle: mean per-seed correlation over 200 seeds x 50
  // samples (10k total) must sit within 3 standard errors of zero.
  const std::size_t num_seeds = 200, n = 50;
  std::vector<double> correlations;
  for (std::uint64_t seed = 0; seed < num_seeds; ++seed) {
    SuiteConfig cfg;
    cfg.seed = seed * 7919 + 1;
    cfg.input_dim = 8;
    cfg.samples = n;
    cfg.regression_noise_std = 0.0;
    cfg.primary = TaskSpec{TaskKind::Regression, 1, 1.0, 0, {}};
    cfg.auxiliaries = {TaskSpec{TaskKind::Regression, 1, 0.0, 0, {}}};
    const TaskSuite suite = generate_suite(cfg);

    std::vector<double> aux_target(n), primary_latent(n);
    for (std::size_t i = 0; i < n; ++i) {
      aux_target[i] = suite.auxiliaries[0].targets.at(i, 0);
      primary_latent[i] =
          latent_of(suite.truth.shared_map, suite.auxiliaries[0].inputs, i)[0];
    }
    correlations.push_back(pearson(aux_target, primary_latent));
  }
  double mean = 0.0;
  for (double r : correlations) mean += r;
  mean /= static_cast<double>(num_seeds);
  double var = 0.0;
  for (double r : correlations) var += (r - mean) * (r - mean);
  var /= static_cast<double>(num_seeds - 1);
  const double standard_error = std::sqrt(var / static_cast<double>(num_seeds));
  CHECK(std::fabs(mean) <= 3.0 * standard_error);
}

TEST_CASE("denoise schedule interpolates variance linearly and checks range") {
  const DenoiseSchedule schedule{100, 0.01, 1.01};
  CHECK(schedule.variance_at(0) == 0.01);
  CHECK(schedule.variance_at(100) == 1.01);
  CHECK(schedule.variance_at(50) == doctest::Approx(0.51).epsilon(1e-14));
  CHECK_THROWS_AS(schedule.variance_at(101), InputError);
}

TEST_CASE("vanishing noise leaves the batch almost clean") {
  const DenoiseSchedule schedule{10, 1e-12, 1e-12};
  const Tensor2 clean = mt2st::testing::random_tensor(6, 4, 5);
  const auto [noisy, noise] = denoise_batch(schedule, 3, clean, 99);
  for (std::size_t i = 0; i < clean.data.size(); ++i)
    CHECK(std::fabs(noisy.data[i] - clean.data[i]) <= 1e-5);
  CHECK(noise.rows == clean.rows);
}

TEST_CASE("noise moments match the schedule (Monte-Carlo)") {
  const DenoiseSchedule schedule{10, 0.04, 0.64};
  const std::size_t t = 5;
  const double sigma2 = schedule.variance_at(t);
  const std::size_t n = 100000;
  const Tensor2 clean(n / 100, 100);  // 1e5 entries of zeros
  const auto [noisy, noise] = denoise_batch(schedule, t, clean, 1234);

  double mean = 0.0;
  for (double v : noisy.data) mean += v;
  mean /= static_cast<double>(n);
  const double se = std::sqrt(sigma2 / static_cast<double>(n));
  CHECK(std::fabs(mean) <= 4.0 * se);

  double var = 0.0;
  for (double v : noisy.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  CHECK(var == doctest::Approx(sigma2).epsilon(0.05));
}

TEST_CASE("denoising tasks validate their schedule and output width") {
  SuiteConfig cfg = base_config(3);
  cfg.auxiliaries = {TaskSpec{TaskKind::Denoising, 8, 0.9, 0, {}}};
  CHECK_THROWS_AS(generate_suite(cfg), ConfigError);  // missing schedule
  cfg.auxiliaries[0].denoise = DenoiseSchedule{50, 0.01, 0.5};
  CHECK_NOTHROW(generate_suite(cfg));
  cfg.auxiliaries[0].output_dim = 4;  // must equal input_dim
  CHECK_THROWS_AS(generate_suite(cfg), ConfigError);
}

TEST_CASE("suite text dump carries the header and one row per sample") {
  const TaskSuite suite = generate_suite(base_config(17));
  std::ostringstream out;
  write_suite_text(out, suite);
  const std::string text = out.str();
  CHECK(text.find("# mt2st-suite-v1") == 0);
  CHECK(text.find("seed 17") != std::string::npos);
  CHECK(text.find("input_dim 8") != std::string::npos);
  std::size_t rows = 0;
  for (char ch : text)
    if (ch == '\n') ++rows;
  // 2 header lines + per task (1 header + samples).
  CHECK(rows == 2 + 3 * (1 + 200));
}

TEST_CASE("aux pretraining on related tasks improves a primary head probe") {
  // The premise the transition strategies exploit: early shared learning
  // helps. Train the encoder on auxiliaries alone, freeze it, fit only the
  // primary head, and compare against the same probe on a random encoder.
  std::size_t wins = 0;
  const std::size_t trials = 10;
  for (std::uint64_t seed = 1; seed <= trials; ++seed) {
    SuiteConfig cfg;
    cfg.seed = seed;
    cfg.input_dim = 12;
    cfg.samples = 400;
    cfg.primary = TaskSpec{TaskKind::Classification, 4, 1.0, 0, {}};
    cfg.auxiliaries = {TaskSpec{TaskKind::Classification, 4, 0.95, 0, {}},
                       TaskSpec{TaskKind::Regression, 4, 0.95, 0, {}}};
    const TaskSuite suite = generate_suite(cfg);

    ModelConfig model;
    model.input_dim = 12;
    model.encoder_dims = {12};
    const std::vector<std::size_t> heads{4, 4, 4};
    const ModelParams init = init_model_params(model, heads, seed);

    const auto head_probe_loss = [&](ModelParams params) {
      // Fit only the primary head on the training split.
      for (int step = 0; step < 400; ++step) {
        const auto& idx = suite.primary.train_indices;
        const std::size_t batch = 32;
        Tensor2 inputs(batch, 12);
        ClassLabels labels(batch);
        for (std::size_t i = 0; i < batch; ++i) {
          const std::size_t row = idx[(step * batch + i) % idx.size()];
          for (std::size_t j = 0; j < 12; ++j)
            inputs.at(i, j) = suite.primary.inputs.at(row, j);
          labels[i] = suite.primary.labels[row];
        }
        GradientSet grads =
            backward(params, forward(params, inputs), 0, labels);
        for (auto& layer : grads.encoder) {  // freeze the encoder
          for (double& v : layer.weight.data) v = 0.0;
          for (double& v : layer.bias) v = 0.0;
        }
        EffectiveGradient eff;
        eff.encoder = grads.encoder;
        eff.heads = grads.heads;
        params = sgd_step(params, eff, 0.5);
      }
      return evaluate(params, suite, Split::Validation)[0].loss;
    };

    // Encoder shaped by the auxiliaries alone (primary head untouched).
    ModelParams pretrained = init;
    for (int step = 0; step < 400; ++step) {
      const std::size_t batch = 32;
      for (std::size_t k = 1; k <= 2; ++k) {
        const TaskDataset& task = suite.task(k);
        const auto& idx = task.train_indices;
        Tensor2 inputs(batch, 12);
        TargetBatch targets;
        if (task.spec.kind == TaskKind::Classification) {
          ClassLabels labels(batch);
          for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t row = idx[(step * batch + i) % idx.size()];
            for (std::size_t j = 0; j < 12; ++j)
              inputs.at(i, j) = task.inputs.at(row, j);
            labels[i] = task.labels[row];
          }
          targets = std::move(labels);
        } else {
          Tensor2 values(batch, task.spec.output_dim);
          for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t row = idx[(step * batch + i) % idx.size()];
            for (std::size_t j = 0; j < 12; ++j)
              inputs.at(i, j) = task.inputs.at(row, j);
            for (std::size_t c = 0; c < task.spec.output_dim; ++c)
              values.at(i, c) = task.targets.at(row, c);
          }
          targets = std::move(values);
        }
        const GradientSet grads =
            backward(pretrained, forward(pretrained, inputs), k, targets);
        EffectiveGradient eff;
        eff.encoder = grads.encoder;
        eff.heads = grads.heads;
        pretrained = sgd_step(pretrained, eff, 0.1);
      }
    }

    const double with_pretraining = head_probe_loss(pretrained);
    const double from_random = head_probe_loss(init);
    if (with_pretraining < from_random) ++wins;
  }
  CHECK(wins >= 7);
}

}  // TEST_SUITE
