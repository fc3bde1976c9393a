#include <benchmark/benchmark.h>

#include <cmath>

#include "edgecache/policy.hpp"

namespace {

edgecache::Provider provider_with(std::size_t classes) {
  edgecache::Provider p;
  p.cap = 100.0;
  for (std::size_t i = 0; i < classes; ++i) {
    const double k = static_cast<double>(i + 1);
    p.classes.push_back({1.0 / k, 1, 50.0 / std::sqrt(k)});
  }
  return p;
}

}  // namespace

static void BM_OptimalPolicy(benchmark::State& state) {
  const auto p = provider_with(static_cast<std::size_t>(state.range(0)));
  double b = 1.0;
  for (auto _ : state) {
    auto sol = edgecache::optimal_policy(b, 300.0, p, 2.0);
    benchmark::DoNotOptimize(sol.policy);
    b = b < 400.0 ? b * 1.01 : 1.0;
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OptimalPolicy)->RangeMultiplier(4)->Range(2, 512)->Complexity();

static void BM_OptimalMcrCurveValue(benchmark::State& state) {
  const auto p = provider_with(static_cast<std::size_t>(state.range(0)));
  const edgecache::OptimalMcrCurve curve(p, 300.0, 2.0);
  double b = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(curve.value(b));
    benchmark::DoNotOptimize(curve.derivative(b));
    b = b < 400.0 ? b * 1.01 : 1.0;
  }
}
BENCHMARK(BM_OptimalMcrCurveValue)->Arg(3)->Arg(64)->Arg(512);
