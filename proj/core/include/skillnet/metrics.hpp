#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "skillnet/corpus.hpp"
#include "skillnet/graph.hpp"
#include "skillnet/partition.hpp"

namespace skillnet {

// Edge lengths used by shortest-path centralities.
enum class PathLength { distance, unit };

PathLength parse_path_length(std::string_view name);

// (n - 1) / sum of shortest-path lengths to every other node.
std::vector<double> closeness(const SkillGraph& g, PathLength lengths = PathLength::distance);

// Shortest-path betweenness (Brandes), normalized by (n - 1)(n - 2) / 2.
// Path lengths within a relative 1e-12 count as ties and split the credit.
std::vector<double> betweenness(const SkillGraph& g, PathLength lengths = PathLength::distance);

// Leading eigenvector of the similarity-weighted adjacency of the largest
// component; nodes outside it score 0.
std::vector<double> eigenvector_centrality(const SkillGraph& g);

// Top max(ceil(10%), 20) cluster members by eigenvector centrality of the
// cluster subgraph (whole cluster if smaller), descending.
std::vector<std::string> eigenvector_subset(const SkillGraph& g, const Partition& p, int cluster);

// Prompt text for an external language model; the skill list is rendered as a
// single-quoted list with ' and \ backslash-escaped.
std::string label_prompt(const std::vector<std::string>& skills);

// Within-cluster share of each node's weighted degree; std::nullopt for
// isolated nodes.
std::vector<std::optional<double>> containment(const SkillGraph& g, const Partition& p);

// Median of the values present; std::nullopt when none are.
std::optional<double> median(std::vector<double> values);

// C_ab = B_ab / sqrt(B_aa B_bb) with B = U^T K U and U_ia = mentions of skill i
// when i is in cluster a.
Eigen::MatrixXd coverage_matrix(const CooccurrenceMatrix& k, const Partition& p);

class SemanticEmbeddings {
 public:
  SemanticEmbeddings() = default;
  SemanticEmbeddings(std::vector<std::string> skills, Eigen::MatrixXd vectors);

  static SemanticEmbeddings load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const Eigen::MatrixXd& vectors() const { return vectors_; }
  // Throws ArgumentError naming the skill when it has no vector.
  Eigen::VectorXd vector(const std::string& skill) const;
  bool contains(const std::string& skill) const { return index_.count(skill) > 0; }

 private:
  std::vector<std::string> skills_;
  Eigen::MatrixXd vectors_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

// Median pairwise cosine similarity inside a cluster; std::nullopt for a
// single-skill cluster.
std::optional<double> semantic_similarity(const SemanticEmbeddings& embeddings,
                                          const std::vector<std::string>& skill_names,
                                          const Partition& p, int cluster);

// Sorted set of clusters touched by each advert (skills given as node indices).
std::vector<std::vector<int>> assign_adverts(const std::vector<std::vector<int>>& adverts,
                                             const Partition& p);

struct ClusterMentions {
  long long n_mentions = 0;
  double average_mentions = 0.0;
  std::optional<double> average_salary;
};

std::vector<ClusterMentions> cluster_mentions_and_salary(
    const std::vector<std::vector<int>>& adverts, const std::vector<std::optional<double>>& salaries,
    const Partition& p);

class TaxonomyCategories {
 public:
  TaxonomyCategories() = default;
  explicit TaxonomyCategories(std::unordered_map<std::string, std::string> category_of);

  static TaxonomyCategories load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Throws ArgumentError naming an uncategorized skill.
  const std::string& category(const std::string& skill) const;
  const std::unordered_map<std::string, std::string>& map() const { return category_of_; }

 private:
  std::unordered_map<std::string, std::string> category_of_;
};

// Shannon entropy (bits) of the category mix of one cluster.
double thematic_entropy(const Partition& p, const std::vector<std::string>& skill_names,
                        const TaxonomyCategories& categories, int cluster);

struct Crosswalk {
  std::vector<std::string> categories;  // sorted
  Eigen::MatrixXi counts;               // cluster x category
};

Crosswalk crosswalk(const Partition& p, const std::vector<std::string>& skill_names,
                    const TaxonomyCategories& categories);

struct ClusterSummary {
  int cluster = 0;
  int n_skills = 0;
  long long n_mentions = 0;
  double average_mentions = 0.0;
  std::optional<double> semantic_similarity;
  std::optional<double> median_containment;
  std::optional<double> median_closeness;
  std::optional<double> average_salary;
  std::optional<double> entropy;
  std::vector<std::string> label_skills;
  std::string label_prompt;
};

struct ReportInputs {
  const SkillGraph* graph = nullptr;
  const Partition* partition = nullptr;
  // Advert skills as graph node indices, with optional salaries.
  const std::vector<std::vector<int>>* adverts = nullptr;
  const std::vector<std::optional<double>>* salaries = nullptr;
  const SemanticEmbeddings* embeddings = nullptr;      // optional
  const TaxonomyCategories* categories = nullptr;      // optional
  const std::vector<double>* closeness = nullptr;      // optional, computed when absent
  PathLength path_lengths = PathLength::distance;
};

std::vector<ClusterSummary> cluster_report(const ReportInputs& inputs);

}  // namespace skillnet
