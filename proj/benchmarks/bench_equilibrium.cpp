#include <benchmark/benchmark.h>

#include "edgecache/equilibrium.hpp"

namespace {

edgecache::GameConfig game_with(std::size_t players) {
  edgecache::GameConfig g;
  g.deployment.reservation = 1.0;
  for (std::size_t c = 0; c < players; ++c) {
    edgecache::Provider p;
    p.cap = 20.0;
    p.price = 0.01;
    const double a = 0.1 + 0.05 * static_cast<double>(c % 5);
    p.classes = {{0.2, 1, a}, {0.3, 1, a}, {0.5, 1, a}};
    g.providers.push_back(p);
  }
  return g;
}

}  // namespace

static void BM_NashEquilibrium(benchmark::State& state) {
  const edgecache::Game game(game_with(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    auto eq = game.nash_equilibrium();
    benchmark::DoNotOptimize(eq.clearing_total);
  }
}
BENCHMARK(BM_NashEquilibrium)->Arg(2)->Arg(3)->Arg(10)->Arg(50);

static void BM_BestResponse(benchmark::State& state) {
  const edgecache::Game game(game_with(3));
  for (auto _ : state) benchmark::DoNotOptimize(game.best_response(0, 5.0));
}
BENCHMARK(BM_BestResponse);
