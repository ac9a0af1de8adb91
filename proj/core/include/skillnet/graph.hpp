#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillnet/embedding.hpp"

namespace skillnet {

using DistanceMatrix = Eigen::MatrixXd;

// d = (1 - S) / max(1 - S) with a zero diagonal.
DistanceMatrix to_distances(const SimilarityMatrix& s);

struct Edge {
  int u = 0;
  int v = 0;
  double weight = 0.0;  // similarity
  double length = 0.0;  // distance
};

// Weighted undirected graph, each edge stored once with u < v.
class SkillGraph {
 public:
  struct Neighbor {
    int node;
    double weight;
    double length;
  };

  SkillGraph() = default;
  SkillGraph(std::vector<std::string> names, std::vector<Edge> edges);

  std::size_t n_nodes() const { return names_.size(); }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t node) const { return names_[node]; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const Neighbor> neighbors(std::size_t node) const {
    return {adjacency_.data() + offsets_[node], adjacency_.data() + offsets_[node + 1]};
  }
  double weighted_degree(std::size_t node) const;

  // Component id per node, numbered by smallest member index.
  std::vector<int> components(int* n_components = nullptr) const;
  bool connected() const;

  SkillGraph induced_subgraph(std::span<const int> nodes) const;
  Eigen::MatrixXd dense_adjacency() const;

 private:
  std::vector<std::string> names_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
};

// k-th nearest-neighbor distance of every row, self excluded.
std::vector<double> kth_neighbor_distances(const DistanceMatrix& d, int k);

// Pairs (i < j) satisfying d_ij < delta * sqrt(d_i^k d_j^k).
std::vector<std::pair<int, int>> cknn_edges(const DistanceMatrix& d, int k, double delta);

struct SparsifyReport {
  std::size_t candidate_edges = 0;
  std::size_t retained_edges = 0;
  std::size_t nonpositive_dropped = 0;  // CkNN pairs whose similarity is <= 0
};

// CkNN graph weighted by similarity and lengthed by distance.
SkillGraph cknn_sparsify(const SimilarityMatrix& s, const DistanceMatrix& d,
                         const std::vector<std::string>& names, int k, double delta,
                         SparsifyReport* report = nullptr);

struct ComponentSelection {
  SkillGraph graph;
  std::vector<int> kept;                 // original index of each kept node
  std::vector<std::string> dropped;      // names of removed nodes
};

// Largest connected component; ties go to the component holding the
// lexicographically smallest skill name.
ComponentSelection largest_component(const SkillGraph& g);

void save_graph(const SkillGraph& g, const std::filesystem::path& edges,
                const std::filesystem::path& nodes);
SkillGraph load_graph(const std::filesystem::path& edges, const std::filesystem::path& nodes);
void save_dot(const SkillGraph& g, const std::filesystem::path& path);

}  // namespace skillnet
