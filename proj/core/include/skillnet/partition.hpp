#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace skillnet {

// Hard assignment of every node to exactly one cluster. Labels are kept
// canonical: contiguous 0..c-1, numbered in order of first appearance, so two
// partitions that differ only by a relabeling compare equal.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::span<const int> labels);
  explicit Partition(const std::vector<int>& labels)
      : Partition(std::span<const int>(labels)) {}

  static Partition single_cluster(std::size_t n_nodes);
  static Partition singletons(std::size_t n_nodes);

  std::size_t n_nodes() const { return cluster_of_.size(); }
  int n_clusters() const { return n_clusters_; }
  int cluster_of(std::size_t node) const { return cluster_of_[node]; }
  const std::vector<int>& labels() const { return cluster_of_; }

  std::vector<std::vector<int>> members() const;
  std::vector<int> cluster_sizes() const;

  // N x c indicator matrix.
  Eigen::MatrixXd indicator() const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<int> cluster_of_;
  int n_clusters_ = 0;
};

// Joint label counts of two partitions over the same node set.
struct Contingency {
  Eigen::MatrixXd counts;  // rows: clusters of the first partition
  Eigen::VectorXd row_sums;
  Eigen::VectorXd col_sums;
  double total = 0.0;
};

Contingency contingency(const Partition& a, const Partition& b);

}  // namespace skillnet
