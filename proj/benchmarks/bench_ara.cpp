#include <benchmark/benchmark.h>

#include <random>

#include "lattice_oracle.hpp"
#include "quadloco/body_planner.hpp"

static void BM_AraStar(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  std::mt19937 rng(6);
  const auto cfg = testsupport::small_lattice_config(cells);
  const auto map = testsupport::random_cost_snapshot(rng, 4 * cells + 4, -0.8, 2.0);
  const auto start = cfg.lattice.state({0, 0, 0});
  const auto goal = cfg.lattice.state({cells - 1, cells - 1, 2});
  for (auto _ : state) benchmark::DoNotOptimize(quadloco::body::ara_star(start, goal, map, cfg));
}
BENCHMARK(BM_AraStar)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
