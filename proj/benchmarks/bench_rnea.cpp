#include <benchmark/benchmark.h>

#include <random>

#include "dyn_fixtures.hpp"
#include "quadloco/wbc_dynamics.hpp"

using namespace quadloco;

static void BM_InverseDynamics(benchmark::State& state) {
  std::mt19937 rng(7);
  const auto s = testsupport::random_state(rng);
  const auto a = testsupport::random_vector18(rng);
  const auto& model = dyn::default_model();
  for (auto _ : state) benchmark::DoNotOptimize(dyn::inverse_dynamics_bias(model, s, a.head<6>(), a.tail<12>()));
}
BENCHMARK(BM_InverseDynamics);

static void BM_WholeBodyTorques(benchmark::State& state) {
  std::mt19937 rng(8);
  const auto s = testsupport::random_state(rng);
  const auto a = testsupport::random_vector18(rng);
  const auto& model = dyn::default_model();
  const std::vector<Leg> stance(kAllLegs.begin(), kAllLegs.end());
  for (auto _ : state) benchmark::DoNotOptimize(dyn::whole_body_torques(model, s, a.head<6>(), a.tail<12>(), stance));
}
BENCHMARK(BM_WholeBodyTorques);

BENCHMARK_MAIN();
