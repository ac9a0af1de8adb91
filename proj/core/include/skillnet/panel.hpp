#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillnet/metrics.hpp"
#include "skillnet/network.hpp"
#include "skillnet/partition.hpp"

namespace skillnet {

struct RegionProfile {
  std::string region;
  std::vector<double> percentages;  // one per cluster, 0..100
  long long n_adverts = 0;
};

struct RegionProfiles {
  std::vector<RegionProfile> profiles;  // sorted by region code
  std::vector<std::string> warnings;
};

// Share (%) of each region's adverts assigned to each cluster. Adverts with no
// region are ignored; regions listed in known_regions without adverts are
// omitted with a warning.
RegionProfiles region_profiles(const std::vector<std::optional<std::string>>& advert_regions,
                               const std::vector<std::vector<int>>& advert_clusters,
                               int n_clusters,
                               const std::vector<std::string>& known_regions = {});

struct ZScores {
  Eigen::MatrixXd values;  // region x cluster
  std::vector<std::string> warnings;
};

// Column-wise (x - mean) / sample sd across regions.
ZScores zscores(const std::vector<RegionProfile>& profiles);

struct Merge {
  int left = 0;   // node ids: leaves 0..n-1, merge k creates node n + k
  int right = 0;
  double height = 0.0;
  int size = 0;
};

struct Dendrogram {
  std::vector<Merge> merges;
  std::vector<int> leaf_order;
};

// Average-linkage agglomerative clustering on Euclidean row distances.
// Ties merge the pair with the lowest leaf indices first.
Dendrogram hier_cluster(const Eigen::MatrixXd& rows);

struct PeriodAdverts {
  std::vector<std::vector<std::string>> skills;  // taxonomy skills per advert
};

struct PeriodMetrics {
  std::vector<double> average_mentions;
  std::vector<std::optional<double>> median_closeness;
  std::vector<std::optional<double>> median_containment;
  double skills_per_advert = 0.0;
  std::size_t n_adverts = 0;
  std::size_t absent_skills = 0;  // reference skills missing from this period's graph
};

struct MetricDelta {
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> absolute;
  std::optional<double> relative;  // (b - a) / a, only when a > 0
};

struct ClusterDeltas {
  MetricDelta average_mentions;
  MetricDelta median_closeness;
  MetricDelta median_containment;
};

struct PeriodComparison {
  PeriodMetrics period_a;
  PeriodMetrics period_b;
  std::vector<ClusterDeltas> clusters;
  MetricDelta skills_per_advert;
};

// Rebuilds the skills network from each period's adverts alone and compares
// per-cluster metrics of a fixed reference partition (over reference_skills).
PeriodComparison compare_periods(const PeriodAdverts& a, const PeriodAdverts& b,
                                 const std::vector<std::string>& reference_skills,
                                 const Partition& reference, const NetworkOptions& options,
                                 PathLength lengths = PathLength::distance);

MetricDelta make_delta(std::optional<double> a, std::optional<double> b);

}  // namespace skillnet
