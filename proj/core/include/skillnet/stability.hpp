#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillnet/graph.hpp"
#include "skillnet/partition.hpp"

namespace skillnet {

// Dense matrix exponential, Pade scaling-and-squaring (Higham 2005).
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// Random-walk operators of a connected undirected weighted graph.
struct DiffusionOperators {
  Eigen::MatrixXd adjacency;
  Eigen::VectorXd degree;
  Eigen::MatrixXd transition;  // M = D^+ A
  Eigen::MatrixXd rate;        // Q = M - I
  Eigen::VectorXd stationary;  // pi, degree / total degree

  Eigen::Index n_nodes() const { return adjacency.rows(); }
};

DiffusionOperators build_operators(const SkillGraph& g);
// Same, from a dense symmetric non-negative adjacency.
DiffusionOperators build_operators(const Eigen::MatrixXd& adjacency);

// P(r) = exp(r Q).
Eigen::MatrixXd propagator(const DiffusionOperators& ops, double r);

// Symmetrized Pi P(r) - pi^T pi.
Eigen::MatrixXd quality_matrix(const DiffusionOperators& ops, double r);

// Markov Stability Tr[H^T (Pi P(r) - pi^T pi) H].
double stability_score(const DiffusionOperators& ops, double r, const Partition& p);
// Same objective against a precomputed quality matrix.
double partition_quality(const Eigen::MatrixXd& quality, const Partition& p);

struct OptimizeOptions {
  int n_runs = 50;
  // Runs entering the across-run NVI (the first nvi_runs runs).
  int nvi_runs = 25;
  std::uint64_t seed = 0;
};

struct OptimizeResult {
  Partition partition;
  double score = 0.0;
  double run_nvi = 0.0;
};

// One greedy multilevel (Louvain-style) optimization from a seeded node order.
Partition louvain(const Eigen::MatrixXd& quality, std::uint64_t seed);

// Best of n_runs seeded Louvain runs on the quality matrix.
OptimizeResult optimize_partition(const Eigen::MatrixXd& quality, const OptimizeOptions& options);
OptimizeResult optimize_partition(const DiffusionOperators& ops, double r,
                                  const OptimizeOptions& options);

// Normalized variation of information, natural logs; 0 when both partitions
// are a single cluster.
double nvi(const Partition& a, const Partition& b);

struct ScaleGrid {
  std::vector<double> scales;  // Markov scales r, strictly increasing

  static ScaleGrid logarithmic(double log10_min, double log10_max, int count);
};

struct ScaleResult {
  double scale = 0.0;
  Partition partition;
  double stability = 0.0;
  double run_nvi = 0.0;
};

struct ScaleScan {
  std::vector<ScaleResult> results;
  Eigen::MatrixXd nvi_matrix;  // between best partitions of every pair of scales

  std::size_t size() const { return results.size(); }
};

ScaleScan scan_scales(const DiffusionOperators& ops, const ScaleGrid& grid,
                      const OptimizeOptions& options);

// Scan bounds such that the end points roughly bracket [min_clusters,
// max_clusters], found by bisection on log10 r with a few cheap runs.
struct ScaleBracket {
  double log10_min = -1.0;
  double log10_max = 1.0;
};
ScaleBracket bracket_scales(const DiffusionOperators& ops, int min_clusters, int max_clusters,
                            std::uint64_t seed, int probe_runs = 5);

struct SelectionOptions {
  int window = 5;
  int max_partitions = 5;
  double run_nvi_threshold = 0.1;
};

struct RobustScale {
  std::size_t index = 0;
  double scale = 0.0;
  Partition partition;
  double block_nvi = 0.0;
  double depth = 0.0;
};

struct Selection {
  std::vector<double> block_nvi;
  std::vector<RobustScale> selected;  // deepest minimum first
  std::vector<std::string> warnings;
};

// Mean of the cross-scale NVI block [t - window, t + window]^2 (clipped at the
// grid ends).
std::vector<double> block_nvi(const Eigen::MatrixXd& nvi_matrix, int window);

// Interior local minima (plateaus count once, at their middle) of the block
// NVI whose across-run NVI is below the threshold, ranked by prominence.
Selection select_robust_scales(const ScaleScan& scan, const SelectionOptions& options);

struct FlowTable {
  Eigen::MatrixXi counts;  // fine cluster x coarse cluster
  double quasi_hierarchy = 0.0;
};

// Node flows between consecutive partitions ordered fine to coarse, with the
// fraction of fine clusters that land >= 90% in one coarse cluster.
std::vector<FlowTable> hierarchy_links(const std::vector<Partition>& partitions);

}  // namespace skillnet
