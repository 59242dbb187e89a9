#include <benchmark/benchmark.h>

#include "fixtures.hpp"

using namespace mfda;

namespace {

CurveSet n2_data(std::size_t subjects, std::size_t points) {
  GeneratorSpec spec = fixture::n2_spec(subjects, 4, 1);
  spec.grid_points = points;
  return generate(spec).data;
}

void BM_TwoLevelCovariances(benchmark::State& state) {
  const CurveSet x = n2_data(static_cast<std::size_t>(state.range(0)), 101);
  const MeanModel means = measure_means(x);
  for (auto _ : state) benchmark::DoNotOptimize(two_level_covariances(x, means));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.rows()));
}
BENCHMARK(BM_TwoLevelCovariances)->Arg(50)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_FitNested(benchmark::State& state) {
  const CurveSet x = n2_data(200, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_nested(x));
}
BENCHMARK(BM_FitNested)->Arg(51)->Arg(101)->Arg(201)->Unit(benchmark::kMillisecond);

void BM_FitThreeLevel(benchmark::State& state) {
  const CurveSet x = generate(fixture::n3_spec(100, 2, static_cast<std::size_t>(state.range(0)), 1)).data;
  NestedConfig config;
  config.levels = 3;
  for (auto _ : state) benchmark::DoNotOptimize(fit_nested(x, config));
}
BENCHMARK(BM_FitThreeLevel)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_PermutationTest(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(n, 3);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Random(n, 3);
  ScoreTestOptions options;
  options.method = static_cast<TestMethod>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(two_sample_score_test(a, b, options));
  state.SetLabel(std::string(to_string(options.method)));
}
BENCHMARK(BM_PermutationTest)
    ->ArgsProduct({{50, 200, 1000}, {0, 1, 2}})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
