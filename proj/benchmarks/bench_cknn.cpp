#include <benchmark/benchmark.h>

#include <random>

#include "skillnet/graph.hpp"

static Eigen::MatrixXd cloud_distances(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const Eigen::MatrixXd pts = Eigen::MatrixXd::NullaryExpr(n, 10, [&] { return g(rng); });
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d(i, j) = (pts.row(i) - pts.row(j)).norm();
  }
  return d;
}

static void BM_CknnEdges(benchmark::State& state) {
  const auto d = cloud_distances(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(skillnet::cknn_edges(d, 15, 1.0));
}
BENCHMARK(BM_CknnEdges)->Arg(300)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
