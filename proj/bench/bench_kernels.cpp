#include <benchmark/benchmark.h>

#include "roughmarket/kernels.hpp"
#include "roughmarket/paths.hpp"
#include "roughmarket/strategies.hpp"

using namespace roughmarket;

namespace {

PricePath fractional_path(std::size_t n, std::uint64_t seed = 7) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::ExpFractional;
  spec.n_samples = n;
  spec.hurst = 0.4;
  spec.sigma = 0.5;
  spec.seed = seed;
  return generate(spec);
}

void BM_VariationSerial(benchmark::State& state) {
  const auto path = fractional_path(static_cast<std::size_t>(state.range(0)));
  const auto phi = VariationFunctional::power(2.5);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::dp_variation(path.values(), phi));
  state.SetComplexityN(state.range(0));
}

void BM_VariationParallel(benchmark::State& state) {
  const auto path = fractional_path(static_cast<std::size_t>(state.range(0)));
  const auto phi = VariationFunctional::power(2.5);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::dp_variation(path.values(), phi));
  state.SetComplexityN(state.range(0));
}

void BM_CrossingsSerial(benchmark::State& state) {
  const auto path = fractional_path(4096);
  const double h = std::ldexp(1.0, -static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::grid_crossings(path.values(), h));
}

void BM_CrossingsParallel(benchmark::State& state) {
  const auto path = fractional_path(4096);
  const double h = std::ldexp(1.0, -static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::grid_crossings(path.values(), h));
}

StrategyMixture small_prop3(const PricePath& path) {
  return volatility_mixture(Prop3Weights{1.0, 1.0}, 1, JPolicy{static_cast<int>(3)}, &path);
}

void BM_MixtureAggregated(benchmark::State& state) {
  const auto path = fractional_path(static_cast<std::size_t>(state.range(0)));
  const auto mix = small_prop3(path);
  for (auto _ : state) benchmark::DoNotOptimize(run_mixture(mix, path, MixtureRoute::Aggregated));
}

void BM_MixtureExpanded(benchmark::State& state) {
  const auto path = fractional_path(static_cast<std::size_t>(state.range(0)));
  const auto mix = small_prop3(path);
  for (auto _ : state) benchmark::DoNotOptimize(run_mixture(mix, path, MixtureRoute::Expanded));
}

}  // namespace

BENCHMARK(BM_VariationSerial)->RangeMultiplier(4)->Range(256, 4096)->Complexity();
BENCHMARK(BM_VariationParallel)->RangeMultiplier(4)->Range(256, 4096)->Complexity();
BENCHMARK(BM_CrossingsSerial)->DenseRange(4, 12, 4);
BENCHMARK(BM_CrossingsParallel)->DenseRange(4, 12, 4);
BENCHMARK(BM_MixtureAggregated)->Arg(256)->Arg(1024);
BENCHMARK(BM_MixtureExpanded)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
