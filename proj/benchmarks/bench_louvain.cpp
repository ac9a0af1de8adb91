#include <benchmark/benchmark.h>

#include "common.hpp"
#include "skillnet/stability.hpp"

static void BM_Optimize(benchmark::State& state) {
  const auto ops = skillnet::build_operators(bench::ring_with_chords(static_cast<int>(state.range(0)), 0.05, 3));
  const auto q = skillnet::quality_matrix(ops, 2.0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(skillnet::optimize_partition(q, {10, 5, seed++}));
}
BENCHMARK(BM_Optimize)->Arg(50)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_NVI(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> label(0, 20);
  std::vector<int> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = label(rng);
    b[i] = label(rng);
  }
  const skillnet::Partition pa(a), pb(b);
  for (auto _ : state) benchmark::DoNotOptimize(skillnet::nvi(pa, pb));
}
BENCHMARK(BM_NVI)->Arg(500)->Arg(3000);

BENCHMARK_MAIN();
