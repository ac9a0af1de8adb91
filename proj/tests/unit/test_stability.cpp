#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "skillnet/error.hpp"
#include "skillnet/stability.hpp"
#include "skillnet/synth.hpp"

using namespace skillnet;

namespace {

Eigen::MatrixXd path3() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = 1.0;
  return a;
}

// Two k-cliques joined by a single edge between node k-1 and node k.
Eigen::MatrixXd barbell(int k) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        if (i != j) a(b * k + i, b * k + j) = 1.0;
      }
    }
  }
  a(k - 1, k) = a(k, k - 1) = 1.0;
  return a;
}

Partition halves(int n) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[i] = i < n / 2 ? 0 : 1;
  return Partition(labels);
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Operators, PathGraph) {
  auto ops = build_operators(path3());
  Eigen::MatrixXd m(3, 3);
  m << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
  EXPECT_LE(max_abs(ops.transition - m), 1e-15);
  EXPECT_NEAR(ops.stationary(0), 0.25, 1e-15);
  EXPECT_NEAR(ops.stationary(1), 0.5, 1e-15);
  EXPECT_NEAR(ops.stationary(2), 0.25, 1e-15);
}

TEST(Operators, RateRowsSumToZero) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto ops = build_operators(oracle::random_adjacency(12, 0.3, rng));
    EXPECT_LE(ops.rate.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Operators, DisconnectedIsRejected) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(0, 1) = a(1, 0) = a(2, 3) = a(3, 2) = 1.0;
  EXPECT_THROW(build_operators(a), ConnectivityError);
}

TEST(Expm, ZeroAndDiagonal) {
  EXPECT_LE(max_abs(expm(Eigen::MatrixXd::Zero(4, 4)) - Eigen::MatrixXd::Identity(4, 4)), 0.0);
  Eigen::MatrixXd d = Eigen::Vector3d(-2.0, 0.5, 3.0).asDiagonal();
  Eigen::MatrixXd e = expm(d);
  EXPECT_NEAR(e(0, 0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(e(2, 2), std::exp(3.0), 1e-13);
}

TEST(Expm, LargeNormMatchesEigendecomposition) {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(8, 8);
  a = (a + a.transpose()).eval() * 6.0;  // symmetric, norm well above the Pade threshold
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  Eigen::MatrixXd ref = eig.eigenvectors() * eig.eigenvalues().array().exp().matrix().asDiagonal() *
                        eig.eigenvectors().transpose();
  EXPECT_LE(max_abs(expm(a) - ref) / max_abs(ref), 1e-12);
}

TEST(Propagator, IdentityAtZero) {
  auto ops = build_operators(path3());
  EXPECT_LE(max_abs(propagator(ops, 0.0) - Eigen::MatrixXd::Identity(3, 3)), 0.0);
  EXPECT_THROW(propagator(ops, -0.1), ArgumentError);
}

TEST(Propagator, MatchesTaylorSeriesAtSmallScale) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto ops = build_operators(oracle::random_adjacency(10, 0.3, rng));
    const double r = 0.3;
    EXPECT_LE(max_abs(propagator(ops, r) - oracle::taylor_expm(r * ops.rate, 20)), 1e-8);
  }
}

TEST(Propagator, StochasticStationarySemigroup) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto ops = build_operators(oracle::random_adjacency(15, 0.2, rng));
    for (double r : {0.1, 1.0, 5.0}) {
      const auto p = propagator(ops, r);
      EXPECT_LE((p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
      EXPECT_LE((ops.stationary.transpose() * p - ops.stationary.transpose()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE(max_abs(p * p - propagator(ops, 2 * r)), 1e-8);
    }
  }
}

TEST(Stability, SingleClusterScoresZero) {
  std::mt19937_64 rng(5);
  auto ops = build_operators(oracle::random_adjacency(9, 0.4, rng));
  for (double r : {0.0, 0.1, 1.0, 10.0}) {
    EXPECT_NEAR(stability_score(ops, r, Partition::single_cluster(9)), 0.0, 1e-12);
  }
}

TEST(Stability, SingletonsAtZeroIsOneMinusSumPiSquared) {
  auto ops = build_operators(path3());
  EXPECT_NEAR(stability_score(ops, 0.0, Partition::singletons(3)), 5.0 / 8.0, 1e-12);
  std::mt19937_64 rng(6);
  auto random_ops = build_operators(oracle::random_adjacency(11, 0.3, rng));
  EXPECT_NEAR(stability_score(random_ops, 0.0, Partition::singletons(11)),
              1.0 - random_ops.stationary.squaredNorm(), 1e-12);
}

TEST(Stability, DimensionMismatch) {
  auto ops = build_operators(path3());
  EXPECT_THROW(stability_score(ops, 1.0, Partition::singletons(4)), ArgumentError);
}

TEST(Stability, QualityMatrixAgreesWithScore) {
  std::mt19937_64 rng(7);
  auto ops = build_operators(oracle::random_adjacency(10, 0.3, rng));
  const auto q = quality_matrix(ops, 0.7);
  EXPECT_LE(max_abs(q - q.transpose()), 0.0);
  Partition p(std::vector<int>{0, 0, 1, 1, 2, 2, 0, 1, 2, 2});
  EXPECT_NEAR(partition_quality(q, p), stability_score(ops, 0.7, p), 1e-14);
}

TEST(BruteForce, BarbellCliquesWinAtModerateScale) {
  auto ops = build_operators(barbell(4));
  auto best = brute_force_stability(ops, 1.0);
  EXPECT_EQ(best.partition, halves(8));
  // Strictly above every other partition: rescoring any single move loses.
  for (int node = 0; node < 8; ++node) {
    auto labels = halves(8).labels();
    labels[node] = 1 - labels[node];
    EXPECT_LT(stability_score(ops, 1.0, Partition(labels)), best.score);
  }
}

TEST(BruteForce, TrivialCases) {
  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(1, 1);
  auto r = brute_force_stability(one, 10);
  EXPECT_EQ(r.partition.n_clusters(), 1);
  EXPECT_DOUBLE_EQ(r.score, 0.0);
  auto ops = build_operators(path3());
  auto zero = brute_force_stability(ops, 0.0);
  EXPECT_EQ(zero.partition, Partition::singletons(3));
  EXPECT_NEAR(zero.score, 5.0 / 8.0, 1e-12);
  EXPECT_THROW(brute_force_stability(Eigen::MatrixXd::Zero(11, 11), 11), ArgumentError);
  EXPECT_THROW(brute_force_stability(Eigen::MatrixXd::Zero(9, 9), 8), ArgumentError);
}

TEST(Optimizer, TwoTrianglesMatchExhaustiveSearch) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) a(3 * b + i, 3 * b + j) = a(3 * b + j, 3 * b + i) = 1.0;
    }
  }
  a(2, 3) = a(3, 2) = 0.1;
  auto ops = build_operators(a);
  for (double r : {0.5, 1.0, 2.0}) {
    auto got = optimize_partition(ops, r, {20, 10, 3});
    auto best = brute_force_stability(ops, r);
    EXPECT_EQ(got.partition, halves(6)) << "r=" << r;
    EXPECT_EQ(best.partition, halves(6));
    EXPECT_NEAR(got.score, best.score, 1e-12);
  }
}

TEST(Optimizer, NeverBeatsTheOracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 8)(rng);
    auto ops = build_operators(oracle::random_adjacency(n, 0.35, rng));
    for (double r : {0.1, 1.0, 10.0}) {
      auto got = optimize_partition(ops, r, {10, 5, static_cast<std::uint64_t>(trial)});
      auto best = brute_force_stability(ops, r);
      EXPECT_LE(got.score, best.score + 1e-9);
      EXPECT_NEAR(got.score, stability_score(ops, r, got.partition), 1e-12);
    }
  }
}

TEST(Optimizer, LargeScaleTrendsToZero) {
  auto ops = build_operators(barbell(5));
  auto got = optimize_partition(ops, 500.0, {10, 5, 1});
  EXPECT_GE(got.score, -1e-12);
  EXPECT_LT(got.score, 1e-6);
  // Merge gains at r = 500 sit below the optimizer's noise floor; coarsening
  // shows at moderate scales.
  EXPECT_LE(optimize_partition(ops, 20.0, {10, 5, 1}).partition.n_clusters(), 2);
}

TEST(Optimizer, Deterministic) {
  std::mt19937_64 rng(9);
  auto ops = build_operators(oracle::random_adjacency(30, 0.1, rng));
  OptimizeOptions opt{15, 8, 77};
  auto a = optimize_partition(ops, 1.5, opt);
  auto b = optimize_partition(ops, 1.5, opt);
  EXPECT_EQ(a.partition, b.partition);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.run_nvi, b.run_nvi);
}

TEST(Nvi, Endpoints) {
  Partition ab_cd(std::vector<int>{0, 0, 1, 1});
  Partition ac_bd(std::vector<int>{0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(nvi(ab_cd, ab_cd), 0.0);
  EXPECT_DOUBLE_EQ(nvi(Partition::singletons(4), Partition::single_cluster(4)), 1.0);
  EXPECT_NEAR(nvi(ab_cd, ac_bd), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(nvi(Partition::single_cluster(4), Partition::single_cluster(4)), 0.0);
  EXPECT_THROW(nvi(ab_cd, Partition::singletons(5)), ArgumentError);
}

TEST(Nvi, SymmetricAndBounded) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 30)(rng);
    std::uniform_int_distribution<int> label(0, std::uniform_int_distribution<int>(0, 6)(rng));
    std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[i] = label(rng);
      b[i] = label(rng);
    }
    const double x = nvi(Partition(a), Partition(b));
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    EXPECT_NEAR(x, nvi(Partition(b), Partition(a)), 1e-14);
  }
}

TEST(Scan, SingleScale) {
  auto ops = build_operators(barbell(4));
  auto scan = scan_scales(ops, ScaleGrid::logarithmic(0.0, 0.0, 1), {5, 3, 1});
  ASSERT_EQ(scan.size(), 1u);
  EXPECT_EQ(scan.nvi_matrix.rows(), 1);
  EXPECT_DOUBLE_EQ(scan.nvi_matrix(0, 0), 0.0);
}

TEST(Scan, CoarsensOnAPlantedHierarchy) {
  // Graph-level planted hierarchy: 8 groups of 4 nested in 2 halves.
  const int n = 32;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double w = 0.0;
      if (i / 4 == j / 4) w = 1.0;
      else if (i / 16 == j / 16) w = 0.08;
      else if ((i + j) % 7 == 0) w = 0.01;
      a(i, j) = a(j, i) = w;
    }
  }
  auto ops = build_operators(a);
  auto scan = scan_scales(ops, ScaleGrid::logarithmic(-1.0, 2.0, 25), {10, 5, 2});
  EXPECT_LE(scan.results.back().partition.n_clusters(), scan.results.front().partition.n_clusters());
  int rises = 0;
  for (std::size_t t = 1; t < scan.size(); ++t) {
    if (scan.results[t].partition.n_clusters() > scan.results[t - 1].partition.n_clusters()) ++rises;
  }
  EXPECT_LE(rises, 2);
  for (std::size_t t = 0; t + 1 < scan.size(); ++t) {
    if (scan.results[t].partition == scan.results[t + 1].partition) {
      EXPECT_DOUBLE_EQ(scan.nvi_matrix(t, t + 1), 0.0);
    }
  }
}

TEST(Selection, TwoZeroBlocksGiveTwoScales) {
  // Scales 5..12 and 17..24 share one partition each; every other scale is unique.
  const int count = 30;
  ScaleScan scan;
  std::vector<int> group(count);
  for (int t = 0; t < count; ++t) group[t] = (t >= 5 && t <= 12) ? 100 : (t >= 17 && t <= 24) ? 200 : t;
  for (int t = 0; t < count; ++t) {
    scan.results.push_back({std::pow(10.0, t / 10.0), Partition::singletons(2), 0.0, 0.0});
  }
  scan.nvi_matrix = Eigen::MatrixXd::Zero(count, count);
  for (int a = 0; a < count; ++a) {
    for (int b = 0; b < count; ++b) scan.nvi_matrix(a, b) = group[a] == group[b] ? 0.0 : 1.0;
  }
  auto sel = select_robust_scales(scan, {2, 5, 0.1});
  ASSERT_EQ(sel.selected.size(), 2u);
  std::vector<std::size_t> idx = {sel.selected[0].index, sel.selected[1].index};
  std::sort(idx.begin(), idx.end());
  EXPECT_GE(idx[0], 5u);
  EXPECT_LE(idx[0], 12u);
  EXPECT_GE(idx[1], 17u);
  EXPECT_LE(idx[1], 24u);
}

TEST(Selection, ConstantLandscapeIsFlat) {
  ScaleScan scan;
  for (int t = 0; t < 12; ++t) scan.results.push_back({1.0 + t, Partition::singletons(2), 0.0, 0.0});
  scan.nvi_matrix = Eigen::MatrixXd::Constant(12, 12, 0.3);
  auto sel = select_robust_scales(scan, {2, 5, 0.1});
  EXPECT_TRUE(sel.selected.empty());
  ASSERT_FALSE(sel.warnings.empty());
  EXPECT_NE(sel.warnings.back().find("flat"), std::string::npos);
}

TEST(Selection, RunNviThresholdAndWindowErrors) {
  ScaleScan scan;
  std::vector<int> group = {0, 1, 2, 3, 3, 3, 4, 5, 6};
  for (int t = 0; t < 9; ++t) scan.results.push_back({1.0 + t, Partition::singletons(2), 0.0, 0.5});
  scan.nvi_matrix.resize(9, 9);
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) scan.nvi_matrix(a, b) = group[a] == group[b] ? 0.0 : 1.0;
  }
  auto sel = select_robust_scales(scan, {1, 5, 0.1});
  EXPECT_TRUE(sel.selected.empty());
  EXPECT_FALSE(sel.warnings.empty());
  EXPECT_THROW(select_robust_scales(scan, {10, 5, 0.1}), ArgumentError);
  EXPECT_THROW(select_robust_scales(scan, {0, 5, 0.1}), ArgumentError);
}

TEST(HierarchyLinks, NestedSplitAndIdentity) {
  Partition fine(std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3});
  Partition coarse(std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1});
  auto nested = hierarchy_links({fine, coarse});
  ASSERT_EQ(nested.size(), 1u);
  EXPECT_DOUBLE_EQ(nested[0].quasi_hierarchy, 1.0);
  for (int i = 0; i < 4; ++i) EXPECT_EQ((nested[0].counts.row(i).array() > 0).count(), 1);

  Partition straddle(std::vector<int>{0, 1, 1, 1, 2, 2, 2, 2});
  Partition split_coarse(std::vector<int>{0, 1, 0, 0, 1, 1, 1, 1});
  auto split = hierarchy_links({straddle, split_coarse});
  // Fine cluster {1,2,3} flows 2:1 into the coarse clusters; the other two nest.
  EXPECT_NEAR(split[0].quasi_hierarchy, 2.0 / 3.0, 1e-15);

  Partition even_fine(std::vector<int>{0, 0, 1, 1});
  Partition even_coarse(std::vector<int>{0, 1, 1, 1});
  auto even = hierarchy_links({even_fine, even_coarse});
  EXPECT_EQ(even[0].counts(0, 0), 1);
  EXPECT_EQ(even[0].counts(0, 1), 1);
  EXPECT_DOUBLE_EQ(even[0].quasi_hierarchy, 0.5);

  auto same = hierarchy_links({fine, fine});
  EXPECT_TRUE(same[0].counts == 2 * Eigen::MatrixXi::Identity(4, 4));
  EXPECT_THROW(hierarchy_links({fine, Partition::singletons(3)}), ArgumentError);
}

TEST(Bracket, EndsBracketTheRequestedRange) {
  auto ops = build_operators(barbell(6));
  auto b = bracket_scales(ops, 2, 11, 5);
  EXPECT_LT(b.log10_min, b.log10_max);
  auto fine = optimize_partition(ops, std::pow(10.0, b.log10_min), {5, 3, 1});
  auto coarse = optimize_partition(ops, std::pow(10.0, b.log10_max), {5, 3, 1});
  EXPECT_GE(fine.partition.n_clusters(), coarse.partition.n_clusters());
  EXPECT_LE(coarse.partition.n_clusters(), 2);
  EXPECT_THROW(bracket_scales(ops, 3, 2, 1), ArgumentError);
}
