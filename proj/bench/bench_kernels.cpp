// Serial reference vs OpenMP kernels for the planner sweeps that dominate
// normalizer construction, designer simulation and the exhaustive oracle.

#include <benchmark/benchmark.h>

#include "ird/designer.hpp"
#include "ird/evaluation.hpp"
#include "ird/kernels.hpp"
#include "ird/random.hpp"

namespace {

using namespace ird;

GridEnvironment bench_env(int side) {
  EnvGenSpec spec;
  spec.width = spec.height = side;
  spec.count = 1;
  spec.seed = 11;
  spec.features_per_env = 5;
  return generate_environments(spec).front();
}

std::vector<RewardParams> bench_thetas(std::size_t n, std::size_t k) {
  Rng rng = make_rng(3);
  std::vector<RewardParams> out(n, RewardParams{std::vector<double>(k)});
  for (auto& t : out) {
    for (double& w : t.weights) w = uniform(rng, -1.0, 1.0);
  }
  return out;
}

void BM_PlanOptimal(benchmark::State& state) {
  const auto env = bench_env(static_cast<int>(state.range(0)));
  const auto thetas = bench_thetas(64, env.k());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_optimal(env, thetas[i++ % thetas.size()]));
  }
}
BENCHMARK(BM_PlanOptimal)->Arg(4)->Arg(6)->Arg(8)->Arg(10);

void BM_PlanBatchSerial(benchmark::State& state) {
  const auto env = bench_env(8);
  const auto thetas = bench_thetas(static_cast<std::size_t>(state.range(0)), env.k());
  for (auto _ : state) benchmark::DoNotOptimize(serial::plan_batch(env, thetas));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PlanBatchSerial)->Arg(256)->Arg(1024);

void BM_PlanBatchParallel(benchmark::State& state) {
  const auto env = bench_env(8);
  const auto thetas = bench_thetas(static_cast<std::size_t>(state.range(0)), env.k());
  for (auto _ : state) benchmark::DoNotOptimize(parallel::plan_batch(env, thetas));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PlanBatchParallel)->Arg(256)->Arg(1024);

void BM_PlanTable(benchmark::State& state) {
  const auto env = bench_env(6);
  const ThetaGrid grid(env.k(), 5);
  const bool par = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(PlanTable(env, grid, par));
}
BENCHMARK(BM_PlanTable)->Arg(0)->Arg(1);

void BM_LogZHat(benchmark::State& state) {
  const auto env = bench_env(8);
  const auto cache = build_normalizer_cache(env, 1000, 10.0, 1);
  const auto thetas = bench_thetas(64, env.k());
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(log_Z_hat(thetas[i++ % thetas.size()], cache));
  state.counters["classes"] = static_cast<double>(cache.class_count());
}
BENCHMARK(BM_LogZHat);

}  // namespace

BENCHMARK_MAIN();
