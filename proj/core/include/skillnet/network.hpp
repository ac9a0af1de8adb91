#pragma once

#include <string>
#include <vector>

#include "skillnet/corpus.hpp"
#include "skillnet/embedding.hpp"
#include "skillnet/graph.hpp"

namespace skillnet {

struct NetworkOptions {
  int n_components = 100;
  bool include_diagonal = true;
  int cknn_k = 15;
  double cknn_delta = 1.0;
};

// Co-occurrence -> correspondence analysis -> cosine similarity -> CkNN ->
// largest component, from taxonomy-mapped adverts.
struct SkillNetwork {
  CooccurrenceMatrix cooccurrence;
  EmbeddingMatrix embedding;
  SparsifyReport sparsify;
  ComponentSelection component;

  const SkillGraph& graph() const { return component.graph; }
};

// Vocabulary of every skill with at least one mention, sorted by name. With
// include_diagonal off, skills never co-mentioned are left out as well since
// their rows would be empty.
Vocabulary mentioned_vocabulary(const std::vector<std::vector<std::string>>& adverts,
                                bool include_diagonal = true);

SkillNetwork build_network(const std::vector<std::vector<std::string>>& adverts,
                           const NetworkOptions& options);

// Graph stage only, for a finished embedding.
ComponentSelection build_graph(const EmbeddingMatrix& embedding, int k, double delta,
                               SparsifyReport* report = nullptr);

}  // namespace skillnet
