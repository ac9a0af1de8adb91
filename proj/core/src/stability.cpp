#include "skillnet/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "seeding.hpp"
#include "skillnet/error.hpp"

namespace skillnet {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool dense_connected(const MatrixXd& a) {
  const auto n = a.rows();
  if (n <= 1) return true;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  Eigen::Index count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (!seen[v] && a(u, v) != 0.0) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

double same_cluster_sum(const MatrixXd& f, const Partition& p) {
  if (static_cast<Eigen::Index>(p.n_nodes()) != f.rows()) {
    throw ArgumentError("partition covers " + std::to_string(p.n_nodes()) + " nodes, operator has " +
                        std::to_string(f.rows()));
  }
  const auto n = f.rows();
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int cj = p.cluster_of(static_cast<std::size_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (p.cluster_of(static_cast<std::size_t>(i)) == cj) total += f(i, j);
    }
  }
  return total;
}

int probe_clusters(const DiffusionOperators& ops, double log10_r, std::uint64_t seed, int runs) {
  OptimizeOptions opt;
  opt.n_runs = runs;
  opt.nvi_runs = 1;
  opt.seed = seed;
  return optimize_partition(ops, std::pow(10.0, log10_r), opt).partition.n_clusters();
}

}  // namespace

DiffusionOperators build_operators(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ArgumentError("adjacency must be square");
  if ((adjacency.array() < 0.0).any()) throw ArgumentError("adjacency weights must be non-negative");
  if (!dense_connected(adjacency)) {
    throw ConnectivityError("graph is disconnected; restrict it to its largest component first");
  }
  DiffusionOperators ops;
  const auto n = adjacency.rows();
  ops.adjacency = adjacency;
  ops.degree = adjacency.rowwise().sum();
  ops.transition = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ops.degree(i) > 0.0) {
      ops.transition.row(i) = adjacency.row(i) / ops.degree(i);
    } else {
      // Only a lone node can have no edges here; its walker stays put.
      ops.transition(i, i) = 1.0;
    }
  }
  ops.rate = ops.transition - MatrixXd::Identity(n, n);
  const double total = ops.degree.sum();
  ops.stationary = total > 0.0 ? VectorXd(ops.degree / total) : VectorXd::Constant(n, 1.0 / n);
  return ops;
}

DiffusionOperators build_operators(const SkillGraph& g) {
  if (!g.connected()) {
    throw ConnectivityError("graph is disconnected; restrict it to its largest component first");
  }
  for (const auto& e : g.edges()) {
    if (!(e.weight > 0.0)) throw ArgumentError("edge weights must be positive for diffusion");
  }
  return build_operators(g.dense_adjacency());
}

Eigen::MatrixXd propagator(const DiffusionOperators& ops, double r) {
  if (!(r >= 0.0)) throw ArgumentError("Markov scale must be non-negative");
  const auto n = ops.n_nodes();
  if (r == 0.0) return MatrixXd::Identity(n, n);
  return expm(r * ops.rate);
}

Eigen::MatrixXd quality_matrix(const DiffusionOperators& ops, double r) {
  const MatrixXd p = propagator(ops, r);
  MatrixXd f = ops.stationary.asDiagonal() * p;
  f -= ops.stationary * ops.stationary.transpose();
  return 0.5 * (f + f.transpose());
}

double stability_score(const DiffusionOperators& ops, double r, const Partition& p) {
  if (static_cast<Eigen::Index>(p.n_nodes()) != ops.n_nodes()) {
    throw ArgumentError("partition covers " + std::to_string(p.n_nodes()) + " nodes, graph has " +
                        std::to_string(ops.n_nodes()));
  }
  MatrixXd f = ops.stationary.asDiagonal() * propagator(ops, r);
  f -= ops.stationary * ops.stationary.transpose();
  return same_cluster_sum(f, p);
}

double partition_quality(const Eigen::MatrixXd& quality, const Partition& p) {
  return same_cluster_sum(quality, p);
}

double nvi(const Partition& a, const Partition& b) {
  const Contingency t = contingency(a, b);
  if (t.total == 0.0) return 0.0;
  auto entropy = [&](const Eigen::VectorXd& counts) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
      if (counts(i) > 0.0) {
        const double q = counts(i) / t.total;
        h -= q * std::log(q);
      }
    }
    return h;
  };
  double joint = 0.0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      if (t.counts(i, j) > 0.0) {
        const double q = t.counts(i, j) / t.total;
        joint -= q * std::log(q);
      }
    }
  }
  if (joint <= 0.0) return 0.0;
  const double vi = 2.0 * joint - entropy(t.row_sums) - entropy(t.col_sums);
  return std::clamp(vi / joint, 0.0, 1.0);
}

ScaleGrid ScaleGrid::logarithmic(double log10_min, double log10_max, int count) {
  if (count < 1) throw ArgumentError("scale grid needs at least one scale");
  if (count > 1 && !(log10_max > log10_min)) throw ArgumentError("scale grid bounds must increase");
  ScaleGrid grid;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    grid.scales.push_back(std::pow(10.0, log10_min + t * (log10_max - log10_min)));
  }
  return grid;
}

ScaleScan scan_scales(const DiffusionOperators& ops, const ScaleGrid& grid,
                      const OptimizeOptions& options) {
  if (grid.scales.empty()) throw ArgumentError("scale grid is empty");
  for (std::size_t t = 1; t < grid.scales.size(); ++t) {
    if (!(grid.scales[t] > grid.scales[t - 1])) throw ArgumentError("scale grid must be strictly increasing");
  }
  const auto count = static_cast<long>(grid.scales.size());
  ScaleScan scan;
  scan.results.resize(grid.scales.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (long t = 0; t < count; ++t) {
    OptimizeOptions opt = options;
    opt.seed = detail::mix_seed(options.seed, static_cast<std::uint64_t>(t));
    const double r = grid.scales[static_cast<std::size_t>(t)];
    auto best = optimize_partition(quality_matrix(ops, r), opt);
    scan.results[static_cast<std::size_t>(t)] = {r, std::move(best.partition), best.score, best.run_nvi};
  }

  scan.nvi_matrix = MatrixXd::Zero(count, count);
#pragma omp parallel for schedule(dynamic, 4)
  for (long a = 0; a < count; ++a) {
    for (long b = a + 1; b < count; ++b) {
      const double v = nvi(scan.results[a].partition, scan.results[b].partition);
      scan.nvi_matrix(a, b) = v;
      scan.nvi_matrix(b, a) = v;
    }
  }
  return scan;
}

ScaleBracket bracket_scales(const DiffusionOperators& ops, int min_clusters, int max_clusters,
                            std::uint64_t seed, int probe_runs) {
  const auto n = static_cast<int>(ops.n_nodes());
  if (min_clusters < 1 || max_clusters < min_clusters) {
    throw ArgumentError("cluster-count range must satisfy 1 <= min <= max");
  }
  const int fine_target = std::min(max_clusters, std::max(1, n - 1));
  const int coarse_target = std::min(min_clusters, fine_target);
  constexpr double kLow = -4.0;
  // Beyond ~10 relaxation times of the slowest mode the quality matrix is
  // round-off, so the search stops there.
  double kHigh = 4.0;
  if (n >= 2) {
    const Eigen::VectorXd inv_sqrt = ops.degree.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd sym = inv_sqrt.asDiagonal() * ops.adjacency * inv_sqrt.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    const double gap = 1.0 - eig.eigenvalues()(n - 2);
    if (gap > 0.0) kHigh = std::clamp(std::log10(10.0 / gap), kLow + 1.0, 8.0);
  }
  std::uint64_t probe = 0;
  auto clusters = [&](double s) { return probe_clusters(ops, s, detail::mix_seed(seed, probe++), probe_runs); };

  // Smallest log10 r in [kLow, kHigh] whose optimum has at most `target` clusters.
  auto first_at_most = [&](int target) {
    double lo = kLow;
    double hi = kHigh;
    if (clusters(lo) <= target) return lo;
    if (clusters(hi) > target) return hi;
    for (int it = 0; it < 14; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (clusters(mid) <= target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  };
  ScaleBracket b;
  b.log10_min = first_at_most(fine_target);
  b.log10_max = first_at_most(coarse_target);
  if (!(b.log10_max > b.log10_min + 0.1)) b.log10_max = b.log10_min + 0.1;
  const double pad = 0.1 * (b.log10_max - b.log10_min);
  b.log10_min -= pad;
  b.log10_max += pad;
  return b;
}

std::vector<double> block_nvi(const Eigen::MatrixXd& nvi_matrix, int window) {
  if (window < 0) throw ArgumentError("block-NVI window must be non-negative");
  const auto t_count = nvi_matrix.rows();
  std::vector<double> out(static_cast<std::size_t>(t_count));
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - window);
    const Eigen::Index hi = std::min<Eigen::Index>(t_count - 1, t + window);
    const Eigen::Index w = hi - lo + 1;
    out[static_cast<std::size_t>(t)] = nvi_matrix.block(lo, lo, w, w).mean();
  }
  return out;
}

Selection select_robust_scales(const ScaleScan& scan, const SelectionOptions& options) {
  if (options.window < 1) throw ArgumentError("block-NVI window must be >= 1");
  if (scan.size() < static_cast<std::size_t>(options.window)) {
    throw ArgumentError("scan of " + std::to_string(scan.size()) + " scales is shorter than window " +
                        std::to_string(options.window));
  }
  Selection sel;
  sel.block_nvi = block_nvi(scan.nvi_matrix, options.window);
  const auto& b = sel.block_nvi;
  const std::size_t t_count = b.size();
  constexpr double kFlat = 1e-12;

  std::size_t minima = 0;
  for (std::size_t s = 0; s < t_count;) {
    std::size_t e = s;
    while (e + 1 < t_count && std::abs(b[e + 1] - b[s]) <= kFlat) ++e;
    const bool interior = s > 0 && e + 1 < t_count;
    if (interior && b[s - 1] > b[s] + kFlat && b[e + 1] > b[s] + kFlat) {
      ++minima;
      const std::size_t mid = (s + e) / 2;
      double left_peak = b[s];
      for (std::size_t i = s; i-- > 0;) {
        if (b[i] < b[s] - kFlat) break;
        left_peak = std::max(left_peak, b[i]);
      }
      double right_peak = b[s];
      for (std::size_t i = e + 1; i < t_count; ++i) {
        if (b[i] < b[s] - kFlat) break;
        right_peak = std::max(right_peak, b[i]);
      }
      const auto& res = scan.results[mid];
      if (res.run_nvi < options.run_nvi_threshold) {
        sel.selected.push_back({mid, res.scale, res.partition, b[mid], std::min(left_peak, right_peak) - b[s]});
      } else {
        sel.warnings.push_back("block-NVI minimum at scale " + std::to_string(res.scale) +
                               " rejected: across-run NVI " + std::to_string(res.run_nvi) +
                               " above threshold");
      }
    }
    s = e + 1;
  }
  if (minima == 0) sel.warnings.push_back("flat block-NVI landscape: no interior local minima");
  std::stable_sort(sel.selected.begin(), sel.selected.end(),
                   [](const RobustScale& x, const RobustScale& y) { return x.depth > y.depth; });
  if (options.max_partitions >= 0 && sel.selected.size() > static_cast<std::size_t>(options.max_partitions)) {
    sel.selected.resize(static_cast<std::size_t>(options.max_partitions));
  }
  return sel;
}

std::vector<FlowTable> hierarchy_links(const std::vector<Partition>& partitions) {
  std::vector<FlowTable> out;
  for (std::size_t k = 0; k + 1 < partitions.size(); ++k) {
    const Contingency t = contingency(partitions[k], partitions[k + 1]);
    FlowTable flow;
    flow.counts = t.counts.cast<int>();
    int nested = 0;
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
      if (t.counts.row(i).maxCoeff() >= 0.9 * t.row_sums(i)) ++nested;
    }
    flow.quasi_hierarchy = t.counts.rows() ? static_cast<double>(nested) / t.counts.rows() : 1.0;
    out.push_back(std::move(flow));
  }
  return out;
}

}  // namespace skillnet
