#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "seeding.hpp"
#include "skillnet/error.hpp"
#include "skillnet/stability.hpp"

namespace skillnet {

namespace {

using Eigen::MatrixXd;

constexpr int kMaxSweeps = 1000;
constexpr int kMaxRounds = 100;

// Greedy single-node moves on a symmetric quality matrix until no move
// improves the objective by more than tol. comm holds ids in [0, m).
bool local_move(const MatrixXd& w, std::vector<int>& comm, std::mt19937_64& rng, double tol) {
  const auto m = static_cast<int>(w.rows());
  std::vector<int> size(m, 0);
  for (int c : comm) ++size[c];
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(m);
  bool any_move = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool moved = false;
    for (int i : order) {
      std::fill(link.begin(), link.end(), 0.0);
      for (int j = 0; j < m; ++j) {
        if (j != i) link[comm[j]] += w(i, j);
      }
      const int current = comm[i];
      int best = -1;
      double best_link = 0.0;
      int first_empty = -1;
      for (int c = 0; c < m; ++c) {
        if (c == current) continue;
        if (size[c] == 0) {
          if (first_empty < 0 && size[current] > 1) first_empty = c;
          continue;
        }
        if (best < 0 || link[c] > best_link) {
          best = c;
          best_link = link[c];
        }
      }
      // An empty cluster offers zero link; prefer the lower id on a tie.
      if (first_empty >= 0 && (best < 0 || 0.0 > best_link || (0.0 == best_link && first_empty < best))) {
        best = first_empty;
        best_link = 0.0;
      }
      if (best >= 0 && best_link > link[current] + tol) {
        --size[current];
        ++size[best];
        comm[i] = best;
        moved = true;
        any_move = true;
      }
    }
    if (!moved) break;
  }
  return any_move;
}

// Renumbers labels to 0..c-1 in order of first appearance; returns c.
int compact(std::vector<int>& labels) {
  std::vector<int> map(labels.size() + 1, -1);
  int next = 0;
  for (int& l : labels) {
    if (map[l] < 0) map[l] = next++;
    l = map[l];
  }
  return next;
}

MatrixXd aggregate(const MatrixXd& f, const std::vector<int>& membership, int c) {
  const auto n = f.rows();
  MatrixXd rows = MatrixXd::Zero(c, n);
  for (Eigen::Index i = 0; i < n; ++i) rows.row(membership[i]) += f.row(i);
  MatrixXd out = MatrixXd::Zero(c, c);
  for (Eigen::Index j = 0; j < n; ++j) out.col(membership[j]) += rows.col(j);
  return out;
}

}  // namespace

Partition louvain(const Eigen::MatrixXd& quality, std::uint64_t seed) {
  const auto n = static_cast<int>(quality.rows());
  if (quality.cols() != quality.rows()) throw ArgumentError("quality matrix must be square");
  if (n == 0) return Partition();
  std::mt19937_64 rng(seed);
  // Quality entries are probabilities; the floor keeps round-off in a
  // vanishing matrix (very large scales) from driving moves.
  const double tol = std::max(1e-12 * quality.cwiseAbs().maxCoeff(), 1e-13);

  std::vector<int> membership(n);
  std::iota(membership.begin(), membership.end(), 0);
  for (int round = 0; round < kMaxRounds; ++round) {
    const bool moved = local_move(quality, membership, rng, tol);
    if (!moved && round > 0) break;
    int c = compact(membership);
    // Coarsen while moves on the aggregated matrix still improve.
    for (;;) {
      const MatrixXd w = aggregate(quality, membership, c);
      std::vector<int> comm(c);
      std::iota(comm.begin(), comm.end(), 0);
      if (!local_move(w, comm, rng, tol)) break;
      for (int& l : membership) l = comm[l];
      c = compact(membership);
    }
  }
  return Partition(membership);
}

OptimizeResult optimize_partition(const Eigen::MatrixXd& quality, const OptimizeOptions& options) {
  if (options.n_runs < 1) throw ArgumentError("n_runs must be >= 1");
  std::vector<Partition> runs;
  runs.reserve(static_cast<std::size_t>(options.n_runs));
  OptimizeResult result;
  int best = -1;
  for (int k = 0; k < options.n_runs; ++k) {
    runs.push_back(louvain(quality, detail::mix_seed(options.seed, static_cast<std::uint64_t>(k))));
    const double score = partition_quality(quality, runs.back());
    if (best < 0 || score > result.score) {
      best = k;
      result.score = score;
    }
  }
  result.partition = runs[static_cast<std::size_t>(best)];

  const int subset = std::clamp(options.nvi_runs, 1, options.n_runs);
  double total = 0.0;
  int pairs = 0;
  for (int a = 0; a < subset; ++a) {
    for (int b = a + 1; b < subset; ++b) {
      total += nvi(runs[a], runs[b]);
      ++pairs;
    }
  }
  result.run_nvi = pairs ? total / pairs : 0.0;
  return result;
}

OptimizeResult optimize_partition(const DiffusionOperators& ops, double r,
                                  const OptimizeOptions& options) {
  return optimize_partition(quality_matrix(ops, r), options);
}

}  // namespace skillnet
