#include <benchmark/benchmark.h>

#include <vector>

#include "sidforest/cart.hpp"
#include "sidforest/forest.hpp"
#include "sidforest/models.hpp"
#include "sidforest/population.hpp"
#include "sidforest/rng.hpp"

using namespace sidforest;

namespace {

std::vector<std::size_t> all_features(std::size_t p) {
  std::vector<std::size_t> f(p);
  for (std::size_t j = 0; j < p; ++j) f[j] = j;
  return f;
}

// Root split of n rows: the sorted prefix-sum scan against the quadratic reference.
void BM_SampleSplitScan(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset d = generate_sample(make_model("additive-oracle", {{"noise", 0.3}}), n, 1);
  const auto rows = d.all_indices();
  const auto f = all_features(d.p());
  for (auto _ : state) benchmark::DoNotOptimize(sample_cart_split(d, rows, Cell::unit(d.p()), f, 7));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SampleSplitScan)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oNLogN);

void BM_BruteForceSplit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset d = generate_sample(make_model("additive-oracle", {{"noise", 0.3}}), n, 1);
  const auto rows = d.all_indices();
  const auto f = all_features(d.p());
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_split_oracle(d, rows, Cell::unit(d.p()), f, 1u << 30));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BruteForceSplit)->RangeMultiplier(4)->Range(64, 1024)->Complexity(benchmark::oNSquared);

void BM_TrainForest(benchmark::State& state) {
  const Dataset d = generate_sample(make_model("sparse-quadratic", {{"noise", 0.3}}), 5000, 2);
  ForestConfig c;
  c.k = static_cast<std::size_t>(state.range(0));
  c.gamma0 = 2.0 / 3.0;
  c.M = 20;
  c.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(c, d));
}
BENCHMARK(BM_TrainForest)->Arg(2)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_ForestPredict(benchmark::State& state) {
  const Dataset d = generate_sample(make_model("sparse-quadratic", {{"noise", 0.3}}), 5000, 2);
  ForestConfig c;
  c.k = 6;
  c.gamma0 = 2.0 / 3.0;
  c.M = 50;
  c.workers = 1;
  const Forest f = train_forest(c, d);
  std::vector<double> x(3);
  std::uint64_t i = 0;
  for (auto _ : state) {
    ++i;
    for (std::size_t j = 0; j < 3; ++j) x[j] = halton(i, j);
    benchmark::DoNotOptimize(f.predict(x));
  }
}
BENCHMARK(BM_ForestPredict);

void BM_TheoreticalSplit(benchmark::State& state) {
  const RegressionModel m = make_model(state.range(0) == 0 ? "additive-oracle" : "logistic");
  const auto f = all_features(m.p());
  for (auto _ : state) benchmark::DoNotOptimize(theoretical_cart_split(m, Cell::unit(m.p()), f));
}
BENCHMARK(BM_TheoreticalSplit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ConditionalMoments(benchmark::State& state) {
  const RegressionModel m = make_model(state.range(0) == 0 ? "additive-oracle" : "logistic");
  Cell cell = Cell::unit(m.p());
  cell = cell.split({0, 0.3}).second;
  for (auto _ : state) benchmark::DoNotOptimize(conditional_moments(m, cell));
}
BENCHMARK(BM_ConditionalMoments)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
