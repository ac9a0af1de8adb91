#include <benchmark/benchmark.h>

#include "common.hpp"
#include "skillnet/metrics.hpp"

static void BM_Closeness(benchmark::State& state) {
  const auto g = bench::as_graph(bench::ring_with_chords(static_cast<int>(state.range(0)), 0.03, 6));
  for (auto _ : state) benchmark::DoNotOptimize(skillnet::closeness(g, skillnet::PathLength::distance));
}
BENCHMARK(BM_Closeness)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Betweenness(benchmark::State& state) {
  const auto g = bench::as_graph(bench::ring_with_chords(static_cast<int>(state.range(0)), 0.03, 7));
  for (auto _ : state) benchmark::DoNotOptimize(skillnet::betweenness(g, skillnet::PathLength::distance));
}
BENCHMARK(BM_Betweenness)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Eigenvector(benchmark::State& state) {
  const auto g = bench::as_graph(bench::ring_with_chords(static_cast<int>(state.range(0)), 0.03, 8));
  for (auto _ : state) benchmark::DoNotOptimize(skillnet::eigenvector_centrality(g));
}
BENCHMARK(BM_Eigenvector)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
