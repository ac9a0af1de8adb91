#include "skillnet/partition.hpp"

#include <unordered_map>

#include "skillnet/error.hpp"

namespace skillnet {

Partition::Partition(std::span<const int> labels) {
  cluster_of_.reserve(labels.size());
  std::unordered_map<int, int> relabel;
  for (int label : labels) {
    auto [it, inserted] = relabel.try_emplace(label, static_cast<int>(relabel.size()));
    cluster_of_.push_back(it->second);
  }
  n_clusters_ = static_cast<int>(relabel.size());
}

Partition Partition::single_cluster(std::size_t n_nodes) {
  return Partition(std::vector<int>(n_nodes, 0));
}

Partition Partition::singletons(std::size_t n_nodes) {
  std::vector<int> labels(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) labels[i] = static_cast<int>(i);
  return Partition(labels);
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> out(n_clusters_);
  for (std::size_t i = 0; i < cluster_of_.size(); ++i) {
    out[cluster_of_[i]].push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Partition::cluster_sizes() const {
  std::vector<int> sizes(n_clusters_, 0);
  for (int c : cluster_of_) ++sizes[c];
  return sizes;
}

Eigen::MatrixXd Partition::indicator() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_nodes()), n_clusters_);
  for (std::size_t i = 0; i < cluster_of_.size(); ++i) h(static_cast<Eigen::Index>(i), cluster_of_[i]) = 1.0;
  return h;
}

Contingency contingency(const Partition& a, const Partition& b) {
  if (a.n_nodes() != b.n_nodes()) {
    throw ArgumentError("partitions cover different node sets (" + std::to_string(a.n_nodes()) +
                        " vs " + std::to_string(b.n_nodes()) + " nodes)");
  }
  Contingency t;
  t.counts = Eigen::MatrixXd::Zero(a.n_clusters(), b.n_clusters());
  for (std::size_t i = 0; i < a.n_nodes(); ++i) t.counts(a.cluster_of(i), b.cluster_of(i)) += 1.0;
  t.row_sums = t.counts.rowwise().sum();
  t.col_sums = t.counts.colwise().sum().transpose();
  t.total = static_cast<double>(a.n_nodes());
  return t;
}

}  // namespace skillnet
