#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

namespace oracle {

Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a, int terms) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

namespace {

std::vector<std::pair<int, int>> random_edge_set(int n, double p, std::mt19937_64& rng) {
  std::set<std::pair<int, int>> edges;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 1; i < n; ++i) {
    const int j = std::uniform_int_distribution<int>(0, i - 1)(rng);
    edges.insert(std::minmax(order[i], order[j]));
  }
  std::bernoulli_distribution extra(p);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (extra(rng)) edges.insert({u, v});
    }
  }
  return {edges.begin(), edges.end()};
}

}  // namespace

skillnet::SkillGraph random_connected_graph(int n, double p, std::mt19937_64& rng) {
  std::vector<skillnet::Edge> edges;
  std::uniform_int_distribution<int> eighths(1, 8);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  for (auto [u, v] : random_edge_set(n, p, rng)) {
    edges.push_back({u, v, weight(rng), eighths(rng) / 8.0});
  }
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("s" + std::to_string(i));
  return skillnet::SkillGraph(names, edges);
}

Eigen::MatrixXd random_adjacency(int n, double p, std::mt19937_64& rng) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  std::uniform_real_distribution<double> weight(0.1, 2.0);
  for (auto [u, v] : random_edge_set(n, p, rng)) a(u, v) = a(v, u) = weight(rng);
  return a;
}

namespace {

struct Enumerator {
  const skillnet::SkillGraph& g;
  bool unit;
  int target = 0;
  std::vector<char> on_path;
  std::vector<int> path;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> best_paths;

  void walk(int node, double length) {
    if (node == target) {
      if (length < best) {
        best = length;
        best_paths.clear();
      }
      if (length == best) best_paths.push_back(path);
      return;
    }
    for (const auto& nb : g.neighbors(static_cast<std::size_t>(node))) {
      if (on_path[nb.node]) continue;
      on_path[nb.node] = 1;
      path.push_back(nb.node);
      walk(nb.node, length + (unit ? 1.0 : nb.length));
      path.pop_back();
      on_path[nb.node] = 0;
    }
  }

  void run(int s, int t) {
    target = t;
    best = std::numeric_limits<double>::infinity();
    best_paths.clear();
    on_path.assign(g.n_nodes(), 0);
    on_path[s] = 1;
    path = {s};
    walk(s, 0.0);
  }
};

}  // namespace

std::vector<double> closeness_by_enumeration(const skillnet::SkillGraph& g, bool unit_lengths) {
  const int n = static_cast<int>(g.n_nodes());
  Enumerator e{g, unit_lengths};
  std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s == t) continue;
      e.run(s, t);
      sum[s] += e.best;
    }
  }
  std::vector<double> out;
  for (double v : sum) out.push_back((n - 1) / v);
  return out;
}

std::vector<double> betweenness_by_enumeration(const skillnet::SkillGraph& g, bool unit_lengths) {
  const int n = static_cast<int>(g.n_nodes());
  Enumerator e{g, unit_lengths};
  std::vector<double> score(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    for (int t = s + 1; t < n; ++t) {
      e.run(s, t);
      const double total = static_cast<double>(e.best_paths.size());
      for (const auto& path : e.best_paths) {
        for (std::size_t k = 1; k + 1 < path.size(); ++k) score[path[k]] += 1.0 / total;
      }
    }
  }
  if (n > 2) {
    const double pairs = (n - 1.0) * (n - 2.0) / 2.0;
    for (double& v : score) v /= pairs;
  }
  return score;
}

std::vector<double> average_linkage_heights(const Eigen::MatrixXd& rows) {
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < rows.rows(); ++i) clusters.push_back({i});
  auto mean_distance = [&](const std::vector<int>& a, const std::vector<int>& b) {
    double sum = 0.0;
    for (int i : a) {
      for (int j : b) sum += (rows.row(i) - rows.row(j)).norm();
    }
    return sum / static_cast<double>(a.size() * b.size());
  };
  std::vector<double> heights;
  while (clusters.size() > 1) {
    std::size_t ba = 0, bb = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double d = mean_distance(clusters[a], clusters[b]);
        if (d < best) {
          best = d;
          ba = a;
          bb = b;
        }
      }
    }
    heights.push_back(best);
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  return heights;
}

double ari_by_pairs(const skillnet::Partition& a, const skillnet::Partition& b) {
  // Pair-counting form: a = both together, b/c = together in one only.
  double both = 0, only_a = 0, only_b = 0, neither = 0;
  for (std::size_t i = 0; i < a.n_nodes(); ++i) {
    for (std::size_t j = i + 1; j < a.n_nodes(); ++j) {
      const bool sa = a.cluster_of(i) == a.cluster_of(j);
      const bool sb = b.cluster_of(i) == b.cluster_of(j);
      if (sa && sb) ++both;
      else if (sa) ++only_a;
      else if (sb) ++only_b;
      else ++neither;
    }
  }
  const double n = both + only_a + only_b + neither;
  const double expected = (both + only_a) * (both + only_b) / n;
  const double max_index = ((both + only_a) + (both + only_b)) / 2.0;
  if (max_index == expected) return a == b ? 1.0 : 0.0;
  return (both - expected) / (max_index - expected);
}

Eigen::MatrixXd residuals_elementwise(const Eigen::MatrixXd& counts) {
  const double total = counts.sum();
  const Eigen::Index n = counts.rows(), m = counts.cols();
  Eigen::MatrixXd z(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ri = counts.row(i).sum() / total;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double cj = counts.col(j).sum() / total;
      z(i, j) = (counts(i, j) / total - ri * cj) / std::sqrt(ri * cj);
    }
  }
  return z;
}

}  // namespace oracle
