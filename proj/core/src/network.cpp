#include "skillnet/network.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "skillnet/error.hpp"

namespace skillnet {

Vocabulary mentioned_vocabulary(const std::vector<std::vector<std::string>>& adverts,
                                bool include_diagonal) {
  std::set<std::string> names;
  for (const auto& skills : adverts) {
    std::set<std::string> distinct(skills.begin(), skills.end());
    if (!include_diagonal && distinct.size() < 2) continue;
    names.insert(distinct.begin(), distinct.end());
  }
  return Vocabulary(std::vector<std::string>(names.begin(), names.end()));
}

ComponentSelection build_graph(const EmbeddingMatrix& embedding, int k, double delta,
                               SparsifyReport* report) {
  const auto s = cosine_similarity(embedding);
  const auto d = to_distances(s);
  const auto g = cknn_sparsify(s, d, embedding.skill_names, k, delta, report);
  return largest_component(g);
}

SkillNetwork build_network(const std::vector<std::vector<std::string>>& adverts,
                           const NetworkOptions& options) {
  SkillNetwork out;
  const auto vocab = mentioned_vocabulary(adverts, options.include_diagonal);
  if (vocab.size() < 3) throw DegenerateError("fewer than three skills are mentioned; no network to build");
  out.cooccurrence = build_cooccurrence(adverts, vocab);
  out.embedding = correspondence_analysis(out.cooccurrence, {options.n_components, options.include_diagonal});
  out.component = build_graph(out.embedding, options.cknn_k, options.cknn_delta, &out.sparsify);
  return out;
}

}  // namespace skillnet
