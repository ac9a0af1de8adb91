#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillnet/corpus.hpp"
#include "skillnet/metrics.hpp"
#include "skillnet/partition.hpp"
#include "skillnet/stability.hpp"

namespace skillnet {

// Advert-level generative model with planted skill clusters.
//
// Skills are split into groups. Either `cluster_sizes` gives a flat partition,
// or `levels` gives nested group counts from coarse to fine (e.g. {2, 4, 16})
// over equally sized groups. Each advert picks a home finest-level cluster and
// draws distinct skills one at a time; a candidate skill's draw weight is p_in
// when it shares the home cluster, p_out when it shares no group, and
// level_affinity[l] when the deepest group it shares is level l (coarse to
// fine, finest level excluded).
struct PlantedSpec {
  int n_skills = 300;
  std::vector<int> cluster_sizes;
  std::vector<int> levels;
  std::vector<double> level_affinity;
  int n_adverts = 10000;
  double p_in = 1.0;
  double p_out = 0.05;
  double mean_skills = 9.0;
  // Gamma-Poisson over-dispersion of the advert size; 0 is Poisson.
  double dispersion = 0.2;
  // Salary mean per finest cluster; defaults to an increasing ladder.
  std::vector<double> salary_means;
  std::vector<double> region_weights = {0.3, 0.25, 0.2, 0.15, 0.1};
  std::uint64_t seed = 1;
  double duplicate_fraction = 0.01;
  double noise_skill_fraction = 0.05;  // adverts carrying a dropped lexicon term
};

struct SyntheticCorpus {
  std::vector<AdvertRecord> adverts;
  std::vector<std::string> skills;                 // taxonomy names, planted order
  std::vector<std::vector<int>> truth;             // per level, finest first: label per skill
  SkillLexicon lexicon;
  RegionTable regions;
  TaxonomyCategories categories;
  SemanticEmbeddings embeddings;

  // Ground truth at a level (0 = finest) over the given skill names.
  Partition truth_partition(std::size_t level, const std::vector<std::string>& names) const;
};

SyntheticCorpus generate_corpus(const PlantedSpec& spec);

// adverts.jsonl, ground_truth.csv (skill,level,cluster), lexicon.csv,
// regions.csv, categories.csv, embeddings.csv.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

struct BruteForceResult {
  Partition partition;
  double score = 0.0;
};

// Exact maximizer of partition_quality by enumerating every set partition.
BruteForceResult brute_force_stability(const Eigen::MatrixXd& quality, int max_nodes = 10);
BruteForceResult brute_force_stability(const DiffusionOperators& ops, double r,
                                       int max_nodes = 10);

// Adjusted Rand index (Hubert-Arabie). When the index is undefined (both
// partitions trivial in the same way) it is 1 for identical partitions, else 0.
double ari(const Partition& a, const Partition& b);

}  // namespace skillnet
