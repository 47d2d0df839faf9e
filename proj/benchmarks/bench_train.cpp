#include <benchmark/benchmark.h>

#include "mt2st/cost_model.hpp"
#include "mt2st/rng.hpp"
#include "mt2st/trainer.hpp"

using namespace mt2st;

namespace {

Tensor2 random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Tensor2 t(rows, cols);
  Rng rng(seed);
  for (double& v : t.data) v = rng.next_normal();
  return t;
}

void BM_ForwardBackward(benchmark::State& state) {
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  ModelConfig cfg;
  cfg.input_dim = dim;
  cfg.encoder_dims = {dim, dim / 2};
  const ModelParams params = init_model_params(cfg, {4, 4}, 1);
  const Tensor2 inputs = random_batch(32, dim, 2);
  Rng rng(3);
  ClassLabels labels(32);
  for (auto& l : labels) l = rng.next_index(4);
  for (auto _ : state) {
    const ForwardCache cache = forward(params, inputs);
    benchmark::DoNotOptimize(task_loss(cache, 0, labels));
    benchmark::DoNotOptimize(backward(params, cache, 0, labels));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(32)->Arg(64);

void BM_GammaDiminish(benchmark::State& state) {
  const DiminishParams p{1.0, 0.01, 1.5};
  std::size_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gamma_diminish(t++ % 10000, p));
  }
}
BENCHMARK(BM_GammaDiminish);

void BM_TrainShortRun(benchmark::State& state) {
  SuiteConfig sc;
  sc.seed = 5;
  sc.input_dim = 16;
  sc.samples = 256;
  sc.primary = TaskSpec{TaskKind::Classification, 4, 1.0, 0, {}};
  sc.auxiliaries = {TaskSpec{TaskKind::Classification, 4, 0.9, 0, {}},
                    TaskSpec{TaskKind::Regression, 4, 0.9, 0, {}}};
  const TaskSuite suite = generate_suite(sc);
  ModelConfig model;
  model.input_dim = 16;
  model.encoder_dims = {16};
  const CostModel cost =
      measure_costs(init_model_params(model, {4, 4, 4}, 5), suite, 32);
  const TrainConfig cfg{0.1, 100, 32, 5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(suite, model, SwitchSchedule{{50}}, cfg,
                                   FeedbackPolicy{}, cost));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_TrainShortRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
