#include "skillnet/panel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "skillnet/error.hpp"

namespace skillnet {

RegionProfiles region_profiles(const std::vector<std::optional<std::string>>& advert_regions,
                               const std::vector<std::vector<int>>& advert_clusters, int n_clusters,
                               const std::vector<std::string>& known_regions) {
  if (advert_regions.size() != advert_clusters.size()) {
    throw ArgumentError("region and cluster assignments must cover the same adverts");
  }
  if (n_clusters < 1) throw ArgumentError("region profiles need at least one cluster");
  struct Tally {
    long long adverts = 0;
    std::vector<long long> hits;
  };
  std::map<std::string, Tally> tally;
  for (std::size_t a = 0; a < advert_regions.size(); ++a) {
    if (!advert_regions[a]) continue;
    auto& t = tally[*advert_regions[a]];
    if (t.hits.empty()) t.hits.assign(static_cast<std::size_t>(n_clusters), 0);
    ++t.adverts;
    std::set<int> touched(advert_clusters[a].begin(), advert_clusters[a].end());
    for (int c : touched) {
      if (c < 0 || c >= n_clusters) throw ArgumentError("advert cluster id out of range");
      ++t.hits[static_cast<std::size_t>(c)];
    }
  }
  RegionProfiles out;
  for (const auto& region : std::set<std::string>(known_regions.begin(), known_regions.end())) {
    if (!tally.count(region)) out.warnings.push_back("region " + region + " has no adverts; omitted");
  }
  for (const auto& [region, t] : tally) {
    RegionProfile p;
    p.region = region;
    p.n_adverts = t.adverts;
    for (long long h : t.hits) p.percentages.push_back(100.0 * static_cast<double>(h) / static_cast<double>(t.adverts));
    out.profiles.push_back(std::move(p));
  }
  return out;
}

ZScores zscores(const std::vector<RegionProfile>& profiles) {
  if (profiles.size() < 2) throw ArgumentError("z-scores need at least two regions");
  const auto rows = static_cast<Eigen::Index>(profiles.size());
  const auto cols = static_cast<Eigen::Index>(profiles.front().percentages.size());
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(profiles[r].percentages.size()) != cols) {
      throw ArgumentError("region profiles differ in cluster count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) x(r, c) = profiles[r].percentages[c];
  }
  ZScores out;
  out.values = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double mean = x.col(c).mean();
    const double ss = (x.col(c).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(rows - 1));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      out.warnings.push_back("cluster " + std::to_string(c) + " has zero variance across regions; z-scores set to 0");
      continue;
    }
    out.values.col(c) = (x.col(c).array() - mean) / sd;
  }
  return out;
}

Dendrogram hier_cluster(const Eigen::MatrixXd& rows) {
  const auto n = static_cast<int>(rows.rows());
  if (n < 2) throw ArgumentError("hierarchical clustering needs at least two rows");
  struct Active {
    int node;
    int size;
    int min_leaf;
  };
  std::vector<Active> active;
  for (int i = 0; i < n; ++i) active.push_back({i, 1, i});
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist(i, j) = (rows.row(i) - rows.row(j)).norm();
  }
  // dist is indexed by slot; slots of merged clusters are reused by the left child.
  std::vector<int> slot(n);
  for (int i = 0; i < n; ++i) slot[i] = i;
  std::vector<std::pair<int, int>> children(static_cast<std::size_t>(n - 1));
  Dendrogram out;
  while (active.size() > 1) {
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> best_key{n, n};
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double d = dist(slot[a], slot[b]);
        const std::pair<int, int> key = std::minmax(active[a].min_leaf, active[b].min_leaf);
        if (d < best || (d == best && key < best_key)) {
          best = d;
          best_key = key;
          best_a = a;
          best_b = b;
        }
      }
    }
    Active left = active[best_a];
    Active right = active[best_b];
    std::size_t left_pos = best_a, right_pos = best_b;
    if (right.min_leaf < left.min_leaf) {
      std::swap(left, right);
      std::swap(left_pos, right_pos);
    }
    const int merged = n + static_cast<int>(out.merges.size());
    out.merges.push_back({left.node, right.node, best, left.size + right.size});
    children[static_cast<std::size_t>(merged - n)] = {left.node, right.node};

    const int ls = slot[left_pos];
    const int rs = slot[right_pos];
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (k == left_pos || k == right_pos) continue;
      const int s = slot[k];
      const double d = (left.size * dist(ls, s) + right.size * dist(rs, s)) / (left.size + right.size);
      dist(ls, s) = d;
      dist(s, ls) = d;
    }
    active[left_pos] = {merged, left.size + right.size, left.min_leaf};
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(right_pos));
    slot.erase(slot.begin() + static_cast<std::ptrdiff_t>(right_pos));
  }
  std::vector<int> stack{n + static_cast<int>(out.merges.size()) - 1};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    if (node < n) {
      out.leaf_order.push_back(node);
    } else {
      stack.push_back(children[static_cast<std::size_t>(node - n)].second);
      stack.push_back(children[static_cast<std::size_t>(node - n)].first);
    }
  }
  return out;
}

MetricDelta make_delta(std::optional<double> a, std::optional<double> b) {
  MetricDelta d{a, b, std::nullopt, std::nullopt};
  if (a && b) {
    d.absolute = *b - *a;
    if (*a > 0.0) d.relative = (*b - *a) / *a;
  }
  return d;
}

namespace {

PeriodMetrics period_metrics(const PeriodAdverts& period, const std::vector<std::string>& reference_skills,
                             const Partition& reference, const NetworkOptions& options, PathLength lengths) {
  const int c = reference.n_clusters();
  std::unordered_map<std::string, int> cluster_of;
  for (std::size_t i = 0; i < reference_skills.size(); ++i) cluster_of[reference_skills[i]] = reference.cluster_of(i);

  PeriodMetrics m;
  m.n_adverts = period.skills.size();
  if (m.n_adverts == 0) throw DegenerateError("period has no adverts");
  std::vector<long long> mentions(static_cast<std::size_t>(c), 0);
  std::size_t total_skills = 0;
  for (const auto& advert : period.skills) {
    const std::set<std::string> distinct(advert.begin(), advert.end());
    total_skills += distinct.size();
    for (const auto& s : distinct) {
      auto it = cluster_of.find(s);
      if (it != cluster_of.end()) ++mentions[static_cast<std::size_t>(it->second)];
    }
  }
  m.skills_per_advert = static_cast<double>(total_skills) / static_cast<double>(m.n_adverts);
  for (long long v : mentions) m.average_mentions.push_back(static_cast<double>(v) / static_cast<double>(m.n_adverts));

  const auto network = build_network(period.skills, options);
  const SkillGraph& g = network.graph();
  // Skills outside the reference set get labels of their own so they never
  // count as within-cluster neighbours.
  std::vector<int> labels(g.n_nodes());
  std::vector<int> ref_cluster(g.n_nodes(), -1);
  std::size_t present = 0;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    auto it = cluster_of.find(g.name(i));
    if (it != cluster_of.end()) {
      labels[i] = it->second;
      ref_cluster[i] = it->second;
      ++present;
    } else {
      labels[i] = c + static_cast<int>(i);
    }
  }
  m.absent_skills = reference_skills.size() - present;
  const auto close = closeness(g, lengths);
  const auto contain = containment(g, Partition(labels));
  std::vector<std::vector<double>> cl(static_cast<std::size_t>(c)), cv(static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    if (ref_cluster[i] < 0) continue;
    cl[static_cast<std::size_t>(ref_cluster[i])].push_back(close[i]);
    if (contain[i]) cv[static_cast<std::size_t>(ref_cluster[i])].push_back(*contain[i]);
  }
  for (int k = 0; k < c; ++k) {
    m.median_closeness.push_back(median(std::move(cl[static_cast<std::size_t>(k)])));
    m.median_containment.push_back(median(std::move(cv[static_cast<std::size_t>(k)])));
  }
  return m;
}

}  // namespace

PeriodComparison compare_periods(const PeriodAdverts& a, const PeriodAdverts& b,
                                 const std::vector<std::string>& reference_skills,
                                 const Partition& reference, const NetworkOptions& options,
                                 PathLength lengths) {
  if (reference.n_nodes() != reference_skills.size()) {
    throw ArgumentError("reference partition does not cover the reference skills");
  }
  PeriodComparison out;
  const PeriodAdverts* inputs[2] = {&a, &b};
  PeriodMetrics* results[2] = {&out.period_a, &out.period_b};
  std::exception_ptr failure[2];
#pragma omp parallel for schedule(static, 1)
  for (int k = 0; k < 2; ++k) {
    try {
      *results[k] = period_metrics(*inputs[k], reference_skills, reference, options, lengths);
    } catch (...) {
      failure[k] = std::current_exception();
    }
  }
  for (const auto& f : failure) {
    if (f) std::rethrow_exception(f);
  }
  for (int k = 0; k < reference.n_clusters(); ++k) {
    ClusterDeltas d;
    d.average_mentions = make_delta(out.period_a.average_mentions[k], out.period_b.average_mentions[k]);
    d.median_closeness = make_delta(out.period_a.median_closeness[k], out.period_b.median_closeness[k]);
    d.median_containment = make_delta(out.period_a.median_containment[k], out.period_b.median_containment[k]);
    out.clusters.push_back(d);
  }
  out.skills_per_advert = make_delta(out.period_a.skills_per_advert, out.period_b.skills_per_advert);
  return out;
}

}  // namespace skillnet
