// Microbenchmarks for the hot paths: channel synthesis, lifted-matrix
// assembly, the two SCA subproblem solves, and one full outer iteration.

#include <benchmark/benchmark.h>

#include "risopt/ao.hpp"
#include "risopt/bench.hpp"
#include "risopt/solver.hpp"

using namespace risopt;

namespace {

Scenario reference_scenario(int elements) {
  Scenario sc;
  sc.ris_elements = elements;
  return sc;
}

struct Fixture {
  ChannelSet channels;
  Eigen::VectorXd sigma2;
  InitialPoint start;
  double total_power;

  explicit Fixture(int elements) {
    const Scenario sc = reference_scenario(elements);
    channels = sc.make_channels(1);
    sigma2 = sc.sigma2();
    AoConfig cfg;
    cfg.seed = 1;
    start = initialize(channels, cfg, sc.total_power);
    total_power = sc.total_power;
  }
};

void BM_ChannelSynthesis(benchmark::State& state) {
  const Scenario sc = reference_scenario(static_cast<int>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sc.make_channels(seed++));
  }
}
BENCHMARK(BM_ChannelSynthesis)->Arg(10)->Arg(30)->Arg(60);

void BM_BuildSurfaceGram(benchmark::State& state) {
  const Fixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    for (int k = 0; k < fx.channels.num_users(); ++k)
      benchmark::DoNotOptimize(build_B(k, fx.channels, fx.start.W, fx.sigma2));
  }
}
BENCHMARK(BM_BuildSurfaceGram)->Arg(10)->Arg(30)->Arg(60);

void BM_SurfaceSolve(benchmark::State& state) {
  const Fixture fx(static_cast<int>(state.range(0)));
  const ExpansionPoint exp = make_expansion(fx.channels, fx.start.f, fx.start.W, fx.start.p,
                                            fx.sigma2, 0.1);
  const Subproblem sp =
      build_p2(fx.channels, fx.start.W, fx.start.p, fx.sigma2, 0.1, exp);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(sp.program));
  }
}
BENCHMARK(BM_SurfaceSolve)->Arg(10)->Arg(30);

void BM_PowerSolve(benchmark::State& state) {
  const Fixture fx(30);
  const ExpansionPoint exp = make_expansion(fx.channels, fx.start.f, fx.start.W, fx.start.p,
                                            fx.sigma2, 0.1);
  const Subproblem sp = build_p4(fx.channels, fx.start.f, fx.start.W, fx.sigma2, 0.1,
                                 fx.total_power, exp);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(sp.program));
  }
}
BENCHMARK(BM_PowerSolve);

void BM_FullOuterIteration(benchmark::State& state) {
  const Fixture fx(static_cast<int>(state.range(0)));
  AoConfig cfg;
  cfg.seed = 1;
  cfg.max_outer = 1;  // exactly one outer pass
  cfg.eps_outer = 1e-12;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(fx.channels, cfg, fx.total_power, fx.sigma2));
  }
}
BENCHMARK(BM_FullOuterIteration)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
