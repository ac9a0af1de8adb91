#pragma once

#include <random>

#include <Eigen/Dense>

#include "skillnet/graph.hpp"

namespace bench {

// Symmetric weighted adjacency: a ring for connectivity plus random chords.
inline Eigen::MatrixXd ring_with_chords(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  std::bernoulli_distribution chord(p);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1) || chord(rng)) a(i, j) = a(j, i) = w(rng);
    }
  }
  return a;
}

inline skillnet::SkillGraph as_graph(const Eigen::MatrixXd& a) {
  std::vector<std::string> names;
  for (int i = 0; i < a.rows(); ++i) names.push_back("s" + std::to_string(i));
  std::vector<skillnet::Edge> edges;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = i + 1; j < a.cols(); ++j) {
      if (a(i, j) > 0) edges.push_back({i, j, a(i, j), 1.0 - a(i, j) + 0.05});
    }
  }
  return skillnet::SkillGraph(names, edges);
}

}  // namespace bench
