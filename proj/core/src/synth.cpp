#include "skillnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>

#include "json.hpp"

#include "seeding.hpp"
#include "skillnet/csv.hpp"
#include "skillnet/error.hpp"

namespace skillnet {

namespace {

constexpr int kEmbeddingDim = 16;
constexpr std::uint64_t kEmbeddingStream = 0x5eedULL << 40;
constexpr std::uint64_t kLayoutStream = 0x1a70ULL << 40;
const std::vector<std::string> kRegionCodes = {"UKC", "UKD", "UKE", "UKF", "UKG", "UKH",
                                                "UKI", "UKJ", "UKK", "UKL", "UKM", "UKN"};
const std::vector<std::string> kDropTerms = {"Dental Insurance", "Team Player", "Full Driving Licence"};
const std::vector<int> kYears = {2016, 2018, 2020, 2022};

std::string skill_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "skill_%03d", i);
  return buf;
}

std::string advert_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ad%07zu", i);
  return buf;
}

// Group label of every skill at every level, coarse to fine.
std::vector<std::vector<int>> layout(const PlantedSpec& spec) {
  if (spec.n_skills < 2) throw ArgumentError("planted corpus needs at least two skills");
  std::vector<std::vector<int>> groups;
  if (!spec.levels.empty()) {
    if (!spec.cluster_sizes.empty()) throw ArgumentError("give either cluster_sizes or levels, not both");
    int prev = 1;
    for (int count : spec.levels) {
      if (count < 1 || count % prev != 0 || spec.n_skills % count != 0) {
        throw ArgumentError("levels must nest (each count divides the next) and divide n_skills");
      }
      const int size = spec.n_skills / count;
      std::vector<int> labels(static_cast<std::size_t>(spec.n_skills));
      for (int i = 0; i < spec.n_skills; ++i) labels[static_cast<std::size_t>(i)] = i / size;
      groups.push_back(std::move(labels));
      prev = count;
    }
    if (spec.level_affinity.size() + 1 != spec.levels.size()) {
      throw ArgumentError("level_affinity needs one weight per level above the finest");
    }
  } else {
    if (spec.cluster_sizes.empty()) throw ArgumentError("planted corpus needs cluster_sizes or levels");
    if (std::accumulate(spec.cluster_sizes.begin(), spec.cluster_sizes.end(), 0) != spec.n_skills) {
      throw ArgumentError("cluster sizes must sum to n_skills");
    }
    std::vector<int> labels;
    for (std::size_t c = 0; c < spec.cluster_sizes.size(); ++c) {
      if (spec.cluster_sizes[c] < 1) throw ArgumentError("cluster sizes must be positive");
      labels.insert(labels.end(), static_cast<std::size_t>(spec.cluster_sizes[c]), static_cast<int>(c));
    }
    groups.push_back(std::move(labels));
    if (!spec.level_affinity.empty()) throw ArgumentError("level_affinity applies only with levels");
  }
  return groups;
}

void validate(const PlantedSpec& spec) {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(spec.p_in) || !prob(spec.p_out) || !(spec.p_in > 0.0) ||
      spec.p_out > spec.p_in) {
    throw ArgumentError("planted probabilities need 0 <= p_out <= p_in <= 1 with p_in > 0");
  }
  for (double a : spec.level_affinity) {
    if (!prob(a)) throw ArgumentError("level affinities must lie in [0, 1]");
  }
  if (spec.n_adverts < 1) throw ArgumentError("n_adverts must be >= 1");
  if (!(spec.mean_skills >= 1.0)) throw ArgumentError("mean_skills must be >= 1");
  if (spec.mean_skills > spec.n_skills) throw ArgumentError("mean skills per advert exceeds the vocabulary");
  if (!(spec.dispersion >= 0.0)) throw ArgumentError("dispersion must be >= 0");
  if (spec.region_weights.empty() || spec.region_weights.size() > kRegionCodes.size()) {
    throw ArgumentError("between 1 and " + std::to_string(kRegionCodes.size()) + " region weights are supported");
  }
  for (double w : spec.region_weights) {
    if (!(w > 0.0)) throw ArgumentError("region weights must be positive");
  }
  if (spec.duplicate_fraction < 0.0 || spec.duplicate_fraction > 1.0) {
    throw ArgumentError("duplicate_fraction must lie in [0, 1]");
  }
  if (!prob(spec.noise_skill_fraction)) throw ArgumentError("noise_skill_fraction must lie in [0, 1]");
}

std::size_t draw_index(const std::vector<double>& weights, double total, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last;
}

}  // namespace

SyntheticCorpus generate_corpus(const PlantedSpec& spec) {
  validate(spec);
  const auto groups = layout(spec);  // coarse to fine
  const auto& finest = groups.back();
  const int n = spec.n_skills;
  const int n_clusters = *std::max_element(finest.begin(), finest.end()) + 1;
  const std::size_t depth = groups.size();

  std::vector<double> salary_means = spec.salary_means;
  if (salary_means.empty()) {
    for (int c = 0; c < n_clusters; ++c) salary_means.push_back(25000.0 + 1500.0 * c);
  }
  if (static_cast<int>(salary_means.size()) != n_clusters) throw ArgumentError("one salary mean per cluster is required");

  SyntheticCorpus out;
  for (int i = 0; i < n; ++i) out.skills.push_back(skill_name(i));
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) out.truth.push_back(*it);

  // Draw weights of every skill for adverts homed in cluster h.
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(n_clusters));
  std::vector<double> totals(static_cast<std::size_t>(n_clusters), 0.0);
  std::vector<int> home_member(static_cast<std::size_t>(n_clusters), -1);
  std::vector<double> home_prob(static_cast<std::size_t>(n_clusters), 0.0);
  for (int i = 0; i < n; ++i) {
    const int c = finest[static_cast<std::size_t>(i)];
    if (home_member[c] < 0) home_member[c] = i;
    home_prob[c] += 1.0;
  }
  for (int h = 0; h < n_clusters; ++h) {
    auto& w = weights[h];
    w.assign(static_cast<std::size_t>(n), spec.p_out);
    const int ref = home_member[h];
    for (int i = 0; i < n; ++i) {
      if (finest[i] == h) {
        w[i] = spec.p_in;
        continue;
      }
      for (std::size_t l = depth - 1; l-- > 0;) {
        if (groups[l][i] == groups[l][ref]) {
          w[i] = spec.level_affinity[l];
          break;
        }
      }
    }
    totals[h] = std::accumulate(w.begin(), w.end(), 0.0);
  }

  std::vector<std::vector<std::string>> aliases(static_cast<std::size_t>(n));
  std::vector<LexiconEntry> lexicon;
  std::unordered_map<std::string, std::string> category_of;
  {
    std::mt19937_64 rng(detail::mix_seed(spec.seed, kLayoutStream));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n_categories = n_clusters;
    for (int i = 0; i < n; ++i) {
      int cat = finest[i];
      if (unit(rng) < 0.1) cat = std::uniform_int_distribution<int>(0, n_categories - 1)(rng);
      const std::string category = "Category " + std::to_string(cat + 1);
      category_of[out.skills[i]] = category;
      aliases[i] = {out.skills[i], "Skill " + std::to_string(i) + " (advanced)"};
      for (const auto& raw : aliases[i]) lexicon.push_back({raw, out.skills[i], category, LexiconAction::keep});
    }
    for (const auto& term : kDropTerms) lexicon.push_back({term, "", "", LexiconAction::drop});
  }
  out.lexicon = SkillLexicon(std::move(lexicon));
  out.categories = TaxonomyCategories(std::move(category_of));

  const std::size_t n_regions = spec.region_weights.size();
  const double weight_total = std::accumulate(spec.region_weights.begin(), spec.region_weights.end(), 0.0);
  {
    std::unordered_map<std::string, std::vector<RegionShare>> map;
    for (std::size_t r = 0; r < n_regions; ++r) map["Town_" + std::to_string(r + 1)] = {{kRegionCodes[r], 1.0}};
    if (n_regions >= 2) {
      map["City"] = {{kRegionCodes[0], 0.5}, {kRegionCodes[1], 0.5}};
    } else {
      map["City"] = {{kRegionCodes[0], 1.0}};
    }
    out.regions = RegionTable(std::move(map));
  }

  {
    std::mt19937_64 rng(detail::mix_seed(spec.seed, kEmbeddingStream));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::MatrixXd> offsets;
    double scale = 1.0;
    for (std::size_t l = 0; l < depth; ++l) {
      const int count = *std::max_element(groups[l].begin(), groups[l].end()) + 1;
      Eigen::MatrixXd o(count, kEmbeddingDim);
      for (Eigen::Index r = 0; r < o.rows(); ++r) {
        for (Eigen::Index c = 0; c < o.cols(); ++c) o(r, c) = scale * normal(rng);
      }
      offsets.push_back(std::move(o));
      scale *= 0.7;
    }
    Eigen::MatrixXd v(n, kEmbeddingDim);
    for (int i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < kEmbeddingDim; ++c) {
        double x = 0.3 * normal(rng);
        for (std::size_t l = 0; l < depth; ++l) x += offsets[l](groups[l][i], c);
        v(i, c) = x;
      }
    }
    out.embeddings = SemanticEmbeddings(out.skills, std::move(v));
  }

  // Each advert has its own substream, so adverts can be drawn in any order.
  const auto n_adverts = static_cast<std::size_t>(spec.n_adverts);
  out.adverts.resize(n_adverts);
  const double lambda = spec.mean_skills - 1.0;
  const double home_total = static_cast<double>(n);
#pragma omp parallel for schedule(static)
  for (std::size_t a = 0; a < n_adverts; ++a) {
    std::mt19937_64 rng(detail::mix_seed(spec.seed, a));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    AdvertRecord& rec = out.adverts[a];
    rec.id = advert_id(a);

    int home = 0;
    {
      double u = unit(rng) * home_total;
      while (home < n_clusters - 1 && u >= home_prob[home]) u -= home_prob[home++];
    }
    double rate = lambda;
    if (spec.dispersion > 0.0 && lambda > 0.0) {
      rate = std::gamma_distribution<double>(1.0 / spec.dispersion, lambda * spec.dispersion)(rng);
    }
    int target = 1 + (rate > 0.0 ? static_cast<int>(std::poisson_distribution<long long>(rate)(rng)) : 0);
    target = std::min(target, n);

    std::vector<double> w = weights[home];
    double total = totals[home];
    for (int k = 0; k < target && total > 1e-12; ++k) {
      const std::size_t s = draw_index(w, total, rng);
      total -= w[s];
      w[s] = 0.0;
      const auto& forms = aliases[s];
      rec.raw_skills.push_back(forms[unit(rng) < 0.8 ? 0 : 1]);
    }
    if (unit(rng) < spec.noise_skill_fraction) {
      rec.raw_skills.push_back(kDropTerms[std::uniform_int_distribution<std::size_t>(0, kDropTerms.size() - 1)(rng)]);
    }

    const int year = kYears[std::uniform_int_distribution<std::size_t>(0, kYears.size() - 1)(rng)];
    const unsigned month = std::uniform_int_distribution<unsigned>(1, 12)(rng);
    const unsigned day = std::uniform_int_distribution<unsigned>(1, 28)(rng);
    rec.first_posted = std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day};

    const double loc = unit(rng);
    if (loc < 0.01) {
      rec.raw_location = "Remote";
    } else if (loc < 0.11) {
      rec.raw_location = "City";
    } else {
      double u = unit(rng) * weight_total;
      std::size_t r = 0;
      while (r + 1 < n_regions && u >= spec.region_weights[r]) u -= spec.region_weights[r++];
      rec.raw_location = "Town_" + std::to_string(r + 1);
    }
    if (unit(rng) < 0.8) {
      const double noise = std::normal_distribution<double>(0.0, 0.1)(rng);
      rec.salary = std::round(salary_means[home] * std::exp(noise - 0.005));
    }
  }

  // Reposts: same id, later date, so deduplication has something to remove.
  const auto n_dup = static_cast<std::size_t>(std::llround(spec.duplicate_fraction * static_cast<double>(n_adverts)));
  std::mt19937_64 dup_rng(detail::mix_seed(spec.seed, n_adverts + 1));
  for (std::size_t k = 0; k < n_dup; ++k) {
    AdvertRecord copy = out.adverts[std::uniform_int_distribution<std::size_t>(0, n_adverts - 1)(dup_rng)];
    copy.first_posted = std::chrono::sys_days{copy.first_posted} + std::chrono::days{30};
    out.adverts.push_back(std::move(copy));
  }
  return out;
}

Partition SyntheticCorpus::truth_partition(std::size_t level, const std::vector<std::string>& names) const {
  if (level >= truth.size()) throw ArgumentError("no ground truth at level " + std::to_string(level));
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < skills.size(); ++i) index[skills[i]] = static_cast<int>(i);
  std::vector<int> labels;
  labels.reserve(names.size());
  for (const auto& name : names) {
    auto it = index.find(name);
    if (it == index.end()) throw ArgumentError("skill '" + name + "' is not in the planted corpus");
    labels.push_back(truth[level][static_cast<std::size_t>(it->second)]);
  }
  return Partition(labels);
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "adverts.jsonl", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "adverts.jsonl").string());
    for (const auto& rec : corpus.adverts) {
      nlohmann::ordered_json j;
      j["id"] = rec.id;
      j["date"] = format_date(rec.first_posted);
      j["location"] = rec.raw_location;
      j["salary"] = rec.salary ? nlohmann::ordered_json(*rec.salary) : nlohmann::ordered_json(nullptr);
      j["skills"] = rec.raw_skills;
      out << j.dump() << '\n';
    }
  }
  {
    std::ofstream out(dir / "ground_truth.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "ground_truth.csv").string());
    csv::write_row(out, {"skill", "level", "cluster"});
    for (std::size_t level = 0; level < corpus.truth.size(); ++level) {
      for (std::size_t i = 0; i < corpus.skills.size(); ++i) {
        csv::write_row(out, {corpus.skills[i], std::to_string(level), std::to_string(corpus.truth[level][i])});
      }
    }
  }
  corpus.lexicon.save(dir / "lexicon.csv");
  corpus.regions.save(dir / "regions.csv");
  corpus.categories.save(dir / "categories.csv");
  corpus.embeddings.save(dir / "embeddings.csv");
}

namespace {

void enumerate(const Eigen::MatrixXd& q, std::vector<int>& labels, int pos, int used, double partial,
               BruteForceResult& best, bool& have) {
  const int n = static_cast<int>(labels.size());
  if (pos == n) {
    if (!have || partial > best.score) {
      best.score = partial;
      best.partition = Partition(labels);
      have = true;
    }
    return;
  }
  for (int c = 0; c <= used && c < n; ++c) {
    labels[pos] = c;
    double add = q(pos, pos);
    for (int j = 0; j < pos; ++j) {
      if (labels[j] == c) add += 2.0 * q(pos, j);
    }
    enumerate(q, labels, pos + 1, c == used ? used + 1 : used, partial + add, best, have);
  }
}

}  // namespace

BruteForceResult brute_force_stability(const Eigen::MatrixXd& quality, int max_nodes) {
  if (quality.rows() != quality.cols()) throw ArgumentError("quality matrix must be square");
  if (max_nodes > 10) throw ArgumentError("exhaustive search is capped at 10 nodes");
  if (quality.rows() > max_nodes) {
    throw ArgumentError("exhaustive search refused: " + std::to_string(quality.rows()) + " nodes exceeds " +
                        std::to_string(max_nodes));
  }
  BruteForceResult best;
  if (quality.rows() == 0) return best;
  const Eigen::MatrixXd q = 0.5 * (quality + quality.transpose());
  std::vector<int> labels(static_cast<std::size_t>(q.rows()), 0);
  bool have = false;
  enumerate(q, labels, 0, 0, 0.0, best, have);
  best.score = partition_quality(quality, best.partition);
  return best;
}

BruteForceResult brute_force_stability(const DiffusionOperators& ops, double r, int max_nodes) {
  if (static_cast<int>(ops.n_nodes()) > max_nodes || max_nodes > 10) {
    throw ArgumentError("exhaustive search refused: graph has " + std::to_string(ops.n_nodes()) + " nodes");
  }
  return brute_force_stability(quality_matrix(ops, r), max_nodes);
}

double ari(const Partition& a, const Partition& b) {
  const auto t = contingency(a, b);
  auto pairs = [](double x) { return 0.5 * x * (x - 1.0); };
  double index = 0.0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) index += pairs(t.counts(i, j));
  }
  double sa = 0.0, sb = 0.0;
  for (Eigen::Index i = 0; i < t.row_sums.size(); ++i) sa += pairs(t.row_sums(i));
  for (Eigen::Index j = 0; j < t.col_sums.size(); ++j) sb += pairs(t.col_sums(j));
  const double total = pairs(t.total);
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  const double denom = max_index - expected;
  if (std::abs(denom) < 1e-12) return a == b ? 1.0 : 0.0;
  return (index - expected) / denom;
}

}  // namespace skillnet
