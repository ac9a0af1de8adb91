#include "skillnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>

#include "skillnet/csv.hpp"
#include "skillnet/error.hpp"

namespace skillnet {

namespace {

constexpr double kTieTolerance = 1e-12;

double edge_length(const SkillGraph::Neighbor& nb, PathLength mode) {
  return mode == PathLength::unit ? 1.0 : nb.length;
}

void require_connected(const SkillGraph& g, const char* what) {
  if (!g.connected()) {
    throw ConnectivityError(std::string(what) + " needs a connected graph; use its largest component");
  }
}

bool same_length(double a, double b) {
  return std::isfinite(b) && std::abs(a - b) <= kTieTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<double> dijkstra(const SkillGraph& g, int source, PathLength mode) {
  using Item = std::pair<double, int>;
  std::vector<double> dist(g.n_nodes(), std::numeric_limits<double>::infinity());
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (const auto& nb : g.neighbors(u)) {
      const double nd = d + edge_length(nb, mode);
      if (nd < dist[nb.node]) {
        dist[nb.node] = nd;
        queue.emplace(nd, nb.node);
      }
    }
  }
  return dist;
}

}  // namespace

PathLength parse_path_length(std::string_view name) {
  if (name == "distance") return PathLength::distance;
  if (name == "unit") return PathLength::unit;
  throw ArgumentError("path lengths must be 'distance' or 'unit', got '" + std::string(name) + "'");
}

std::vector<double> closeness(const SkillGraph& g, PathLength lengths) {
  require_connected(g, "closeness");
  const std::size_t n = g.n_nodes();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  for (std::size_t s = 0; s < n; ++s) {
    const auto dist = dijkstra(g, static_cast<int>(s), lengths);
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    out[s] = total > 0.0 ? static_cast<double>(n - 1) / total : 0.0;
  }
  return out;
}

std::vector<double> betweenness(const SkillGraph& g, PathLength lengths) {
  require_connected(g, "betweenness");
  const std::size_t n = g.n_nodes();
  std::vector<double> score(n, 0.0);
  if (n < 3) return score;

  using Item = std::pair<double, int>;
  std::vector<double> dist(n);
  std::vector<double> sigma(n);
  std::vector<double> delta(n);
  std::vector<std::vector<int>> preds(n);
  std::vector<int> order;
  order.reserve(n);
  std::vector<bool> settled(n);

  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(settled.begin(), settled.end(), false);
    for (auto& p : preds) p.clear();
    order.clear();

    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[s] = 0.0;
    sigma[s] = 1.0;
    queue.emplace(0.0, static_cast<int>(s));
    while (!queue.empty()) {
      auto [d, u] = queue.top();
      queue.pop();
      if (settled[u] || d > dist[u]) continue;
      settled[u] = true;
      order.push_back(u);
      for (const auto& nb : g.neighbors(u)) {
        const int v = nb.node;
        if (settled[v]) continue;
        const double nd = d + edge_length(nb, lengths);
        if (same_length(nd, dist[v])) {
          sigma[v] += sigma[u];
          preds[v].push_back(u);
        } else if (nd < dist[v]) {
          dist[v] = nd;
          sigma[v] = sigma[u];
          preds[v].assign(1, u);
          queue.emplace(nd, v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int w = *it;
      for (int v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != static_cast<int>(s)) score[w] += delta[w];
    }
  }
  // Each unordered pair was counted from both ends.
  const double norm = static_cast<double>(n - 1) * static_cast<double>(n - 2);
  for (auto& v : score) v /= norm;
  return score;
}

std::vector<double> eigenvector_centrality(const SkillGraph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const auto comp = largest_component(g);
  const SkillGraph& core = comp.graph;
  const std::size_t m = core.n_nodes();
  if (m == 1) {
    out[comp.kept[0]] = 1.0;
    return out;
  }
  // Power iteration on A + I: same leading eigenvector, no oscillation on
  // bipartite structure.
  Eigen::VectorXd x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), 1.0 / std::sqrt(m));
  Eigen::VectorXd next(x.size());
  for (int it = 0; it < 10000; ++it) {
    next = x;
    for (std::size_t u = 0; u < m; ++u) {
      for (const auto& nb : core.neighbors(u)) next(static_cast<Eigen::Index>(u)) += nb.weight * x(nb.node);
    }
    next /= next.norm();
    const double change = (next - x).cwiseAbs().maxCoeff();
    x.swap(next);
    if (change < 1e-13) break;
  }
  for (std::size_t k = 0; k < m; ++k) out[comp.kept[k]] = x(static_cast<Eigen::Index>(k));
  return out;
}

std::vector<std::string> eigenvector_subset(const SkillGraph& g, const Partition& p, int cluster) {
  if (p.n_nodes() != g.n_nodes()) throw ArgumentError("partition does not cover the graph");
  if (cluster < 0 || cluster >= p.n_clusters()) throw ArgumentError("no such cluster");
  std::vector<int> members;
  for (std::size_t i = 0; i < p.n_nodes(); ++i) {
    if (p.cluster_of(i) == cluster) members.push_back(static_cast<int>(i));
  }
  const SkillGraph sub = g.induced_subgraph(members);
  const auto comp = largest_component(sub);
  std::vector<bool> in_core(members.size(), false);
  for (int k : comp.kept) in_core[k] = true;
  const auto centrality = eigenvector_centrality(sub);

  std::vector<std::size_t> order(members.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (in_core[a] != in_core[b]) return static_cast<bool>(in_core[a]);
    return in_core[a] && centrality[a] > centrality[b];
  });
  const std::size_t size = members.size();
  const std::size_t take = std::min(size, std::max<std::size_t>((size + 9) / 10, 20));
  std::vector<std::string> out;
  for (std::size_t k = 0; k < take; ++k) out.push_back(g.name(members[order[k]]));
  return out;
}

std::string label_prompt(const std::vector<std::string>& skills) {
  if (skills.empty()) throw ArgumentError("label prompt needs at least one skill");
  std::string list = "[";
  for (std::size_t i = 0; i < skills.size(); ++i) {
    if (i) list += ", ";
    list += '\'';
    for (char c : skills[i]) {
      if (c == '\'' || c == '\\') list += '\\';
      list += c;
    }
    list += '\'';
  }
  list += "]";
  return "This is a list of the most representative skills extracted from a skill cluster and they "
         "are ordered by their eigenvector centralities in descending order. Please summarise the "
         "following list in one word or phrase such that it captures the semantic meaning of each "
         "skill. The list is: " +
         list + ".";
}

std::vector<std::optional<double>> containment(const SkillGraph& g, const Partition& p) {
  if (p.n_nodes() != g.n_nodes()) throw ArgumentError("partition does not cover the graph");
  std::vector<std::optional<double>> out(g.n_nodes());
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    double inside = 0.0;
    double total = 0.0;
    for (const auto& nb : g.neighbors(i)) {
      total += nb.weight;
      if (p.cluster_of(static_cast<std::size_t>(nb.node)) == p.cluster_of(i)) inside += nb.weight;
    }
    if (total > 0.0) out[i] = std::clamp(inside / total, 0.0, 1.0);
  }
  return out;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

Eigen::MatrixXd coverage_matrix(const CooccurrenceMatrix& k, const Partition& p) {
  if (p.n_nodes() != k.n_skills()) throw ArgumentError("partition does not cover the co-occurrence vocabulary");
  const auto n = static_cast<Eigen::Index>(k.n_skills());
  const int c = p.n_clusters();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, c);
  for (Eigen::Index i = 0; i < n; ++i) u(i, p.cluster_of(static_cast<std::size_t>(i))) = static_cast<double>(k.counts(i, i));
  const Eigen::MatrixXd b = u.transpose() * (k.counts.cast<double>() * u);
  Eigen::MatrixXd out(c, c);
  for (int a = 0; a < c; ++a) {
    if (!(b(a, a) > 0.0)) {
      throw ArgumentError("cluster " + std::to_string(a) + " has no mentions; coverage undefined");
    }
  }
  for (int a = 0; a < c; ++a) {
    out(a, a) = 1.0;
    for (int d = a + 1; d < c; ++d) {
      const double v = 0.5 * (b(a, d) + b(d, a)) / std::sqrt(b(a, a) * b(d, d));
      out(a, d) = v;
      out(d, a) = v;
    }
  }
  return out;
}

SemanticEmbeddings::SemanticEmbeddings(std::vector<std::string> skills, Eigen::MatrixXd vectors)
    : skills_(std::move(skills)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(skills_.size()) != vectors_.rows()) {
    throw ArgumentError("semantic embeddings: names and vectors disagree in count");
  }
  for (std::size_t i = 0; i < skills_.size(); ++i) {
    if (!(vectors_.row(static_cast<Eigen::Index>(i)).norm() > 0.0)) {
      throw FormatError("semantic embedding of '" + skills_[i] + "' is a zero vector");
    }
    if (!index_.emplace(skills_[i], static_cast<Eigen::Index>(i)).second) {
      throw FormatError("duplicate semantic embedding for '" + skills_[i] + "'");
    }
  }
}

SemanticEmbeddings SemanticEmbeddings::load(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  if (table.header.size() < 2 || table.header[0] != "skill") {
    throw FormatError(path.string() + ": embedding header must be skill,v1..vD");
  }
  const auto d = static_cast<Eigen::Index>(table.header.size() - 1);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(table.rows.size()), d);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) throw FormatError(path.string() + ": embeddings differ in dimension");
    names.push_back(row[0]);
    for (Eigen::Index k = 0; k < d; ++k) v(static_cast<Eigen::Index>(i), k) = csv::parse_double(row[k + 1]);
  }
  return SemanticEmbeddings(std::move(names), std::move(v));
}

void SemanticEmbeddings::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  csv::Row header{"skill"};
  for (Eigen::Index k = 0; k < vectors_.cols(); ++k) header.push_back("v" + std::to_string(k + 1));
  csv::write_row(out, header);
  for (std::size_t i = 0; i < skills_.size(); ++i) {
    csv::Row row{skills_[i]};
    for (Eigen::Index k = 0; k < vectors_.cols(); ++k) {
      row.push_back(csv::format_double(vectors_(static_cast<Eigen::Index>(i), k)));
    }
    csv::write_row(out, row);
  }
}

Eigen::VectorXd SemanticEmbeddings::vector(const std::string& skill) const {
  auto it = index_.find(skill);
  if (it == index_.end()) throw ArgumentError("no semantic embedding for skill '" + skill + "'");
  return vectors_.row(it->second).transpose();
}

std::optional<double> semantic_similarity(const SemanticEmbeddings& embeddings,
                                          const std::vector<std::string>& skill_names,
                                          const Partition& p, int cluster) {
  if (p.n_nodes() != skill_names.size()) throw ArgumentError("partition does not cover the skill list");
  std::vector<Eigen::VectorXd> unit;
  for (std::size_t i = 0; i < p.n_nodes(); ++i) {
    if (p.cluster_of(i) == cluster) unit.push_back(embeddings.vector(skill_names[i]).normalized());
  }
  if (unit.size() < 2) return std::nullopt;
  std::vector<double> sims;
  sims.reserve(unit.size() * (unit.size() - 1) / 2);
  for (std::size_t a = 0; a < unit.size(); ++a) {
    for (std::size_t b = a + 1; b < unit.size(); ++b) sims.push_back(unit[a].dot(unit[b]));
  }
  return median(std::move(sims));
}

std::vector<std::vector<int>> assign_adverts(const std::vector<std::vector<int>>& adverts,
                                             const Partition& p) {
  std::vector<std::vector<int>> out;
  out.reserve(adverts.size());
  for (const auto& skills : adverts) {
    auto& set = out.emplace_back();
    for (int s : skills) {
      if (s < 0 || static_cast<std::size_t>(s) >= p.n_nodes()) {
        throw ArgumentError("advert skill index " + std::to_string(s) + " outside the partition");
      }
      set.push_back(p.cluster_of(static_cast<std::size_t>(s)));
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return out;
}

std::vector<ClusterMentions> cluster_mentions_and_salary(
    const std::vector<std::vector<int>>& adverts, const std::vector<std::optional<double>>& salaries,
    const Partition& p) {
  if (salaries.size() != adverts.size()) throw ArgumentError("one salary slot per advert is required");
  const int c = p.n_clusters();
  std::vector<ClusterMentions> out(c);
  std::vector<double> salary_sum(c, 0.0);
  std::vector<long long> salary_count(c, 0);
  const auto sets = assign_adverts(adverts, p);
  for (std::size_t a = 0; a < adverts.size(); ++a) {
    for (int s : adverts[a]) ++out[p.cluster_of(static_cast<std::size_t>(s))].n_mentions;
    if (salaries[a]) {
      for (int cl : sets[a]) {
        salary_sum[cl] += *salaries[a];
        ++salary_count[cl];
      }
    }
  }
  for (int cl = 0; cl < c; ++cl) {
    out[cl].average_mentions =
        adverts.empty() ? 0.0 : static_cast<double>(out[cl].n_mentions) / static_cast<double>(adverts.size());
    if (salary_count[cl] > 0) out[cl].average_salary = salary_sum[cl] / static_cast<double>(salary_count[cl]);
  }
  return out;
}

TaxonomyCategories::TaxonomyCategories(std::unordered_map<std::string, std::string> category_of)
    : category_of_(std::move(category_of)) {}

TaxonomyCategories TaxonomyCategories::load(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const int skill = table.column("skill");
  const int cat = table.column("category");
  if (skill < 0 || cat < 0) throw FormatError(path.string() + ": category header must be skill,category");
  std::unordered_map<std::string, std::string> map;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw FormatError(path.string() + ": ragged category row");
    map[row[skill]] = row[cat];
  }
  return TaxonomyCategories(std::move(map));
}

void TaxonomyCategories::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  csv::write_row(out, {"skill", "category"});
  std::vector<std::pair<std::string, std::string>> rows(category_of_.begin(), category_of_.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [skill, cat] : rows) csv::write_row(out, {skill, cat});
}

const std::string& TaxonomyCategories::category(const std::string& skill) const {
  auto it = category_of_.find(skill);
  if (it == category_of_.end()) throw ArgumentError("skill '" + skill + "' has no taxonomy category");
  return it->second;
}

double thematic_entropy(const Partition& p, const std::vector<std::string>& skill_names,
                        const TaxonomyCategories& categories, int cluster) {
  if (p.n_nodes() != skill_names.size()) throw ArgumentError("partition does not cover the skill list");
  std::map<std::string, int> counts;
  int total = 0;
  for (std::size_t i = 0; i < p.n_nodes(); ++i) {
    if (p.cluster_of(i) != cluster) continue;
    ++counts[categories.category(skill_names[i])];
    ++total;
  }
  double h = 0.0;
  for (const auto& [cat, count] : counts) {
    const double q = static_cast<double>(count) / total;
    h -= q * std::log2(q);
  }
  return std::max(0.0, h);
}

Crosswalk crosswalk(const Partition& p, const std::vector<std::string>& skill_names,
                    const TaxonomyCategories& categories) {
  if (p.n_nodes() != skill_names.size()) throw ArgumentError("partition does not cover the skill list");
  std::set<std::string> names;
  for (const auto& s : skill_names) names.insert(categories.category(s));
  Crosswalk out;
  out.categories.assign(names.begin(), names.end());
  out.counts = Eigen::MatrixXi::Zero(p.n_clusters(), static_cast<Eigen::Index>(out.categories.size()));
  for (std::size_t i = 0; i < p.n_nodes(); ++i) {
    const auto& cat = categories.category(skill_names[i]);
    const auto col = std::lower_bound(out.categories.begin(), out.categories.end(), cat) - out.categories.begin();
    ++out.counts(p.cluster_of(i), col);
  }
  return out;
}

std::vector<ClusterSummary> cluster_report(const ReportInputs& in) {
  if (!in.graph || !in.partition || !in.adverts || !in.salaries) {
    throw ArgumentError("cluster report needs a graph, a partition and adverts");
  }
  const SkillGraph& g = *in.graph;
  const Partition& p = *in.partition;
  if (p.n_nodes() != g.n_nodes()) throw ArgumentError("partition does not cover the graph");

  std::vector<double> own_closeness;
  const std::vector<double>* close = in.closeness;
  if (!close) {
    own_closeness = closeness(g, in.path_lengths);
    close = &own_closeness;
  }
  const auto contain = containment(g, p);
  const auto mentions = cluster_mentions_and_salary(*in.adverts, *in.salaries, p);
  const auto members = p.members();

  std::vector<ClusterSummary> out;
  for (int c = 0; c < p.n_clusters(); ++c) {
    ClusterSummary s;
    s.cluster = c;
    s.n_skills = static_cast<int>(members[c].size());
    s.n_mentions = mentions[c].n_mentions;
    s.average_mentions = mentions[c].average_mentions;
    s.average_salary = mentions[c].average_salary;
    std::vector<double> cv, cl;
    for (int i : members[c]) {
      if (contain[i]) cv.push_back(*contain[i]);
      cl.push_back((*close)[i]);
    }
    s.median_containment = median(std::move(cv));
    s.median_closeness = median(std::move(cl));
    if (in.embeddings) s.semantic_similarity = semantic_similarity(*in.embeddings, g.names(), p, c);
    if (in.categories) s.entropy = thematic_entropy(p, g.names(), *in.categories, c);
    s.label_skills = eigenvector_subset(g, p, c);
    s.label_prompt = label_prompt(s.label_skills);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace skillnet
