#include <vector>

#include "doctest.h"
#include "mt2st/cost_model.hpp"
#include "mt2st/errors.hpp"
#include "mt2st/rng.hpp"
#include "test_helpers.hpp"

using namespace mt2st;

namespace {

std::vector<std::vector<double>> constant_gammas(std::size_t steps,
                                                 std::size_t k, double value) {
  return std::vector<std::vector<double>>(steps, std::vector<double>(k, value));
}

TaskSuite small_suite(std::size_t aux_count, std::uint64_t seed = 1) {
  SuiteConfig cfg;
  cfg.seed = seed;
  cfg.input_dim = 4;
  cfg.samples = 20;
  cfg.primary = TaskSpec{TaskKind::Classification, 3, 1.0, 0, {}};
  for (std::size_t k = 0; k < aux_count; ++k)
    cfg.auxiliaries.push_back(TaskSpec{TaskKind::Classification, 3, 0.8, 0, {}});
  return generate_suite(cfg);
}

}  // namespace

TEST_SUITE("cost_model") {

TEST_CASE("stl and mtl limits are exact") {
  const CostModel cm{1000.0, {250.0, 125.0}, CostSource::Analytic};
  const std::size_t steps = 377;
  CHECK(mt2st_cost(constant_gammas(steps, 2, 0.0), cm) ==
        static_cast<double>(steps) * cm.c_stl);
  CHECK(mt2st_cost(constant_gammas(steps, 2, 1.0), cm) ==
        static_cast<double>(steps) * cm.c_mtl());
  CHECK(cm.c_mtl() == 1375.0);
}

TEST_CASE("switch at T/2 matches the closed-form sum exactly") {
  const CostModel cm{800.0, {300.0}, CostSource::Analytic};
  const std::size_t steps = 500;
  std::vector<std::vector<double>> gammas;
  for (std::size_t t = 0; t < steps; ++t)
    gammas.push_back({t < steps / 2 ? 1.0 : 0.0});
  const double expected = static_cast<double>(steps / 2) * (800.0 + 300.0) +
                          static_cast<double>(steps - steps / 2) * 800.0;
  CHECK(mt2st_cost(gammas, cm) == expected);
  CHECK(mt2st_cost(gammas, cm, CostAccounting::Realized) == expected);
}

TEST_CASE("expected mode scales with gamma, realized charges full cost") {
  const CostModel cm{100.0, {40.0}, CostSource::Analytic};
  const std::vector<std::vector<double>> gammas{{0.5}};
  CHECK(mt2st_cost(gammas, cm, CostAccounting::Expected) == 120.0);
  CHECK(mt2st_cost(gammas, cm, CostAccounting::Realized) == 140.0);
}

TEST_CASE("cost is monotone in every weight entry and bounded by the limits") {
  const CostModel cm{512.0, {128.0, 64.0, 32.0}, CostSource::Analytic};
  Rng rng(31);
  const std::size_t steps = 50;
  const double stl_total = mt2st_cost(constant_gammas(steps, 3, 0.0), cm);
  const double mtl_total = mt2st_cost(constant_gammas(steps, 3, 1.0), cm);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::vector<double>> gammas(steps, std::vector<double>(3));
    for (auto& step : gammas)
      for (double& g : step) g = rng.next_unit();
    const double cost = mt2st_cost(gammas, cm);
    CHECK(cost >= stl_total);
    CHECK(cost <= mtl_total);

    // Bump one entry; the total must not decrease.
    auto bumped = gammas;
    bumped[rng.next_index(steps)][rng.next_index(3)] += rng.next_unit();
    CHECK(mt2st_cost(bumped, cm) >= cost);
  }
}

TEST_CASE("compression rate: identity, halving, and an MTL run at 2x cost") {
  CHECK(compression_rate(1000.0, 1000.0) == 0.0);
  CHECK(compression_rate(500.0, 1000.0) == 50.0);
  // MTL with K=1 and C_1 == c_stl costs twice the STL baseline.
  const CostModel cm{100.0, {100.0}, CostSource::Analytic};
  const std::size_t steps = 10;
  const double stl = mt2st_cost(constant_gammas(steps, 1, 0.0), cm);
  const double mtl = mt2st_cost(constant_gammas(steps, 1, 1.0), cm);
  CHECK(compression_rate(mtl, stl) == -100.0);
  CHECK_THROWS_AS(compression_rate(10.0, 0.0), InputError);
}

TEST_CASE("measured costs: symmetric heads give identical marginals") {
  const TaskSuite suite = small_suite(2);
  ModelConfig cfg;
  cfg.input_dim = 4;
  cfg.encoder_dims = {5};
  const ModelParams params = init_model_params(cfg, {3, 3, 3}, 7);
  const CostModel cm = measure_costs(params, suite, 8);
  REQUIRE(cm.c_marginal.size() == 2);
  CHECK(cm.c_marginal[0] == cm.c_marginal[1]);
  CHECK(cm.source == CostSource::Measured);
  CHECK(cm.c_stl > 0.0);
}

TEST_CASE("measured costs: no auxiliaries means c_mtl == c_stl") {
  const TaskSuite suite = small_suite(0);
  ModelConfig cfg;
  cfg.input_dim = 4;
  cfg.encoder_dims = {5};
  const ModelParams params = init_model_params(cfg, {3}, 7);
  const CostModel cm = measure_costs(params, suite, 4);
  CHECK(cm.c_marginal.empty());
  CHECK(cm.c_mtl() == cm.c_stl);
}

TEST_CASE("measured costs match an independent MAC tally") {
  const TaskSuite suite = small_suite(2);
  ModelConfig cfg;
  cfg.input_dim = 4;
  cfg.encoder_dims = {6};
  const ModelParams params = init_model_params(cfg, {3, 3, 3}, 9);
  const std::size_t batch = 5;
  const CostModel cm = measure_costs(params, suite, batch);

  // Hand tally: encoder 4->6 (24 MACs), heads 6->3 (18 MACs). Forward at 2
  // FLOPs per MAC, backward at twice forward.
  const double enc_fwd = 2.0 * 24 * batch;
  const double enc_bwd = 2.0 * enc_fwd;
  const double head_fwd = 2.0 * 18 * batch;
  const double head_bwd = 2.0 * head_fwd;
  CHECK(cm.c_stl == enc_fwd + enc_bwd + head_fwd + head_bwd);
  for (double c : cm.c_marginal) CHECK(c == head_fwd + head_bwd + enc_bwd);

  // Agreement with the per-task analytic counter.
  CHECK(cm.c_stl == static_cast<double>(flops_per_task_step(params, batch, 0)));
}

TEST_CASE("weight vector length must match the model") {
  const CostModel cm{10.0, {1.0, 2.0}, CostSource::Analytic};
  const std::vector<std::vector<double>> bad{{0.5}};
  CHECK_THROWS_AS(mt2st_cost(bad, cm), ContractError);
}

}  // TEST_SUITE
