#include <benchmark/benchmark.h>

#include "edgecache/spatial.hpp"

static void BM_EstimateMissRate(benchmark::State& state) {
  const auto points = edgecache::generate_poisson({0, 0, 2, 3}, 786.2, 1);
  edgecache::Deployment d;
  d.sc_density = 786.2;
  d.slots_per_unit = 10000;
  d.reservation = 2.0;
  edgecache::Provider p;
  p.cap = 1000.0;
  p.classes = {{0.589, 1000, 0.0}, {0.294, 4000, 0.0}, {0.118, 10000, 0.0}};
  const std::vector<double> shares{0.02, 0.05, 0.1};
  edgecache::SimOptions options;
  options.trials = 10000;
  const double radius = static_cast<double>(state.range(0)) / 1000.0;
  for (auto _ : state) {
    auto e = edgecache::estimate_miss_rate(points, d, p, shares, radius, options);
    benchmark::DoNotOptimize(e.miss_rate);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(options.trials));
}
BENCHMARK(BM_EstimateMissRate)->Arg(50)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_GeneratePoisson(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto set = edgecache::generate_poisson({0, 0, 2, 3}, 786.2, seed++);
    benchmark::DoNotOptimize(set.points.data());
  }
}
BENCHMARK(BM_GeneratePoisson);
