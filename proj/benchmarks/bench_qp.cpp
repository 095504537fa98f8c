#include <benchmark/benchmark.h>

#include <random>

#include "qp_oracle.hpp"
#include "quadloco/qp.hpp"

static void BM_SolveRandom(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937 rng(5);
  const auto P = testsupport::random_feasible_problem(rng, n, n / 4, 2 * n);
  for (auto _ : state) benchmark::DoNotOptimize(quadloco::qp::solve(P));
}
BENCHMARK(BM_SolveRandom)->Arg(8)->Arg(32)->Arg(128);

BENCHMARK_MAIN();
