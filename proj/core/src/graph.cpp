#include "skillnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <unordered_map>

#include "skillnet/csv.hpp"
#include "skillnet/error.hpp"

namespace skillnet {

DistanceMatrix to_distances(const SimilarityMatrix& s) {
  if (s.rows() != s.cols()) throw ArgumentError("similarity matrix must be square");
  DistanceMatrix d = (1.0 - s.array()).matrix();
  d.diagonal().setZero();
  d = d.cwiseMax(0.0);
  const double d_max = d.maxCoeff();
  if (!(d_max > 0.0)) {
    throw DegenerateError("all embeddings coincide; distances are identically zero");
  }
  d /= d_max;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) d(j, i) = d(i, j);
  }
  return d;
}

SkillGraph::SkillGraph(std::vector<std::string> names, std::vector<Edge> edges)
    : names_(std::move(names)), edges_(std::move(edges)) {
  const int n = static_cast<int>(names_.size());
  for (auto& e : edges_) {
    if (e.u == e.v) throw ArgumentError("self-loop on node '" + names_.at(e.u) + "'");
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) throw ArgumentError("edge endpoint out of range");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].u == edges_[i - 1].u && edges_[i].v == edges_[i - 1].v) {
      throw ArgumentError("duplicate edge " + names_[edges_[i].u] + " -- " + names_[edges_[i].v]);
    }
  }
  std::vector<std::size_t> degree(names_.size(), 0);
  for (const auto& e : edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  offsets_.assign(names_.size() + 1, 0);
  for (std::size_t i = 0; i < names_.size(); ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[cursor[e.u]++] = {e.v, e.weight, e.length};
    adjacency_[cursor[e.v]++] = {e.u, e.weight, e.length};
  }
}

double SkillGraph::weighted_degree(std::size_t node) const {
  double total = 0.0;
  for (const auto& nb : neighbors(node)) total += nb.weight;
  return total;
}

std::vector<int> SkillGraph::components(int* n_components) const {
  std::vector<int> comp(n_nodes(), -1);
  int count = 0;
  std::vector<int> stack;
  for (std::size_t start = 0; start < n_nodes(); ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = count;
    stack.push_back(static_cast<int>(start));
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& nb : neighbors(u)) {
        if (comp[nb.node] < 0) {
          comp[nb.node] = count;
          stack.push_back(nb.node);
        }
      }
    }
    ++count;
  }
  if (n_components) *n_components = count;
  return comp;
}

bool SkillGraph::connected() const {
  int count = 0;
  components(&count);
  return count <= 1;
}

SkillGraph SkillGraph::induced_subgraph(std::span<const int> nodes) const {
  std::vector<int> position(n_nodes(), -1);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    position.at(nodes[k]) = static_cast<int>(k);
    names.push_back(names_[nodes[k]]);
  }
  std::vector<Edge> edges;
  for (const auto& e : edges_) {
    if (position[e.u] >= 0 && position[e.v] >= 0) {
      edges.push_back({position[e.u], position[e.v], e.weight, e.length});
    }
  }
  return SkillGraph(std::move(names), std::move(edges));
}

Eigen::MatrixXd SkillGraph::dense_adjacency() const {
  const auto n = static_cast<Eigen::Index>(n_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : edges_) {
    a(e.u, e.v) = e.weight;
    a(e.v, e.u) = e.weight;
  }
  return a;
}

std::vector<double> kth_neighbor_distances(const DistanceMatrix& d, int k) {
  const Eigen::Index n = d.rows();
  if (d.cols() != n) throw ArgumentError("distance matrix must be square");
  if (k < 1 || k > n - 1) {
    throw ArgumentError("CkNN k must lie in [1, " + std::to_string(n - 1) + "], got " + std::to_string(k));
  }
  std::vector<double> kth(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Eigen::Index>> row;
  row.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row.emplace_back(d(i, j), j);
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    kth[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(k - 1)].first;
  }
  return kth;
}

std::vector<std::pair<int, int>> cknn_edges(const DistanceMatrix& d, int k, double delta) {
  if (!(delta > 0.0)) throw ArgumentError("CkNN delta must be positive");
  const auto kth = kth_neighbor_distances(d, k);
  std::vector<std::pair<int, int>> edges;
  const auto n = static_cast<int>(d.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (d(i, j) < delta * std::sqrt(kth[i] * kth[j])) edges.emplace_back(i, j);
    }
  }
  return edges;
}

SkillGraph cknn_sparsify(const SimilarityMatrix& s, const DistanceMatrix& d,
                         const std::vector<std::string>& names, int k, double delta,
                         SparsifyReport* report) {
  if (s.rows() != d.rows() || static_cast<std::size_t>(d.rows()) != names.size()) {
    throw ArgumentError("similarity, distance and names disagree in size");
  }
  const auto pairs = cknn_edges(d, k, delta);
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  std::size_t nonpositive = 0;
  for (auto [i, j] : pairs) {
    if (s(i, j) > 0.0) {
      edges.push_back({i, j, s(i, j), d(i, j)});
    } else {
      ++nonpositive;
    }
  }
  if (report) {
    const auto n = static_cast<std::size_t>(d.rows());
    report->candidate_edges = n * (n - 1) / 2;
    report->retained_edges = edges.size();
    report->nonpositive_dropped = nonpositive;
  }
  return SkillGraph(names, std::move(edges));
}

ComponentSelection largest_component(const SkillGraph& g) {
  int count = 0;
  const auto comp = g.components(&count);
  std::vector<int> size(count, 0);
  std::vector<const std::string*> smallest(count, nullptr);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const int c = comp[i];
    ++size[c];
    if (!smallest[c] || g.name(i) < *smallest[c]) smallest[c] = &g.name(i);
  }
  int best = 0;
  for (int c = 1; c < count; ++c) {
    if (size[c] > size[best] || (size[c] == size[best] && *smallest[c] < *smallest[best])) best = c;
  }
  ComponentSelection out;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    if (comp[i] == best) {
      out.kept.push_back(static_cast<int>(i));
    } else {
      out.dropped.push_back(g.name(i));
    }
  }
  out.graph = out.dropped.empty() ? g : g.induced_subgraph(out.kept);
  return out;
}

void save_graph(const SkillGraph& g, const std::filesystem::path& edges,
                const std::filesystem::path& nodes) {
  {
    std::ofstream out(nodes, std::ios::binary);
    if (!out) throw IoError("cannot write " + nodes.string());
    csv::write_row(out, {"index", "skill"});
    for (std::size_t i = 0; i < g.n_nodes(); ++i) csv::write_row(out, {std::to_string(i), g.name(i)});
  }
  std::ofstream out(edges, std::ios::binary);
  if (!out) throw IoError("cannot write " + edges.string());
  csv::write_row(out, {"skill_i", "skill_j", "similarity", "distance"});
  for (const auto& e : g.edges()) {
    csv::write_row(out, {g.name(e.u), g.name(e.v), csv::format_double(e.weight),
                         csv::format_double(e.length)});
  }
}

SkillGraph load_graph(const std::filesystem::path& edges, const std::filesystem::path& nodes) {
  const auto node_table = csv::read_table(nodes);
  const int idx = node_table.column("index");
  const int skill = node_table.column("skill");
  if (idx < 0 || skill < 0) throw FormatError(nodes.string() + ": node header must be index,skill");
  std::vector<std::string> names(node_table.rows.size());
  std::unordered_map<std::string, int> index;
  for (const auto& row : node_table.rows) {
    const long long i = csv::parse_int(row.at(idx));
    if (i < 0 || i >= static_cast<long long>(names.size())) throw FormatError(nodes.string() + ": bad index");
    names[i] = row.at(skill);
    index[row.at(skill)] = static_cast<int>(i);
  }
  const auto edge_table = csv::read_table(edges);
  const int a = edge_table.column("skill_i");
  const int b = edge_table.column("skill_j");
  const int w = edge_table.column("similarity");
  const int l = edge_table.column("distance");
  if (a < 0 || b < 0 || w < 0 || l < 0) {
    throw FormatError(edges.string() + ": edge header must be skill_i,skill_j,similarity,distance");
  }
  std::vector<Edge> list;
  for (const auto& row : edge_table.rows) {
    auto ia = index.find(row.at(a));
    auto ib = index.find(row.at(b));
    if (ia == index.end() || ib == index.end()) throw FormatError(edges.string() + ": edge names unknown node");
    list.push_back({ia->second, ib->second, csv::parse_double(row.at(w)), csv::parse_double(row.at(l))});
  }
  return SkillGraph(std::move(names), std::move(list));
}

void save_dot(const SkillGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  auto escape = [](const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '"' || c == '\\') r.push_back('\\');
      r.push_back(c);
    }
    return r;
  };
  out << "graph skills {\n";
  for (std::size_t i = 0; i < g.n_nodes(); ++i) out << "  n" << i << " [label=\"" << escape(g.name(i)) << "\"];\n";
  for (const auto& e : g.edges()) {
    out << "  n" << e.u << " -- n" << e.v << " [weight=" << csv::format_double(e.weight)
        << ", len=" << csv::format_double(e.length) << "];\n";
  }
  out << "}\n";
}

}  // namespace skillnet
