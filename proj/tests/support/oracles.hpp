#pragma once

// Slow, independent reference computations used as test oracles. None of
// these call into the library's own algorithms for the quantity they check.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "skillnet/graph.hpp"
#include "skillnet/partition.hpp"

namespace oracle {

// sum_{k < terms} A^k / k!
Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a, int terms = 20);

// Connected graph: random spanning tree plus extra edges with probability p.
// Lengths are multiples of 1/8 so every path sum is exact in binary floating
// point; weights are uniform in [0.1, 1].
skillnet::SkillGraph random_connected_graph(int n, double p, std::mt19937_64& rng);

// Dense symmetric adjacency of a connected random graph.
Eigen::MatrixXd random_adjacency(int n, double p, std::mt19937_64& rng);

// Both enumerate every simple path between every pair depth-first.
std::vector<double> closeness_by_enumeration(const skillnet::SkillGraph& g, bool unit_lengths);
std::vector<double> betweenness_by_enumeration(const skillnet::SkillGraph& g, bool unit_lengths);

// Merge heights of average linkage, recomputing every inter-cluster mean
// distance from the raw rows at every step.
std::vector<double> average_linkage_heights(const Eigen::MatrixXd& rows);

// ARI from explicit pair counting over all node pairs.
double ari_by_pairs(const skillnet::Partition& a, const skillnet::Partition& b);

// D_r^{-1/2} (P - r c^T) D_c^{-1/2}, written out element by element.
Eigen::MatrixXd residuals_elementwise(const Eigen::MatrixXd& counts);

}  // namespace oracle
