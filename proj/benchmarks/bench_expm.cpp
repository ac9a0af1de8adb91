#include <benchmark/benchmark.h>

#include "common.hpp"
#include "skillnet/stability.hpp"

static void BM_Propagator(benchmark::State& state) {
  const auto ops = skillnet::build_operators(bench::ring_with_chords(static_cast<int>(state.range(0)), 0.05, 1));
  for (auto _ : state) benchmark::DoNotOptimize(skillnet::propagator(ops, 3.0));
}
BENCHMARK(BM_Propagator)->Arg(50)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

// Large scales need more squarings.
static void BM_PropagatorScale(benchmark::State& state) {
  const auto ops = skillnet::build_operators(bench::ring_with_chords(200, 0.05, 2));
  const double r = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(skillnet::propagator(ops, r));
}
BENCHMARK(BM_PropagatorScale)->Arg(1)->Arg(100)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
