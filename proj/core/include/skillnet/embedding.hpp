#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillnet/corpus.hpp"

namespace skillnet {

// Row i is the embedding of skill i.
struct EmbeddingMatrix {
  std::vector<std::string> skill_names;
  Eigen::MatrixXd vectors;
  // Explained-inertia fraction of each returned component, descending.
  std::vector<double> inertia_fractions;
  double total_inertia = 0.0;

  Eigen::Index dimension() const { return vectors.cols(); }
  double cumulative_inertia() const;
};

struct CaOptions {
  int n_components = 100;
  bool include_diagonal = true;
};

// Correspondence analysis of a non-negative count matrix. Returns the row
// principal coordinates F = D_r^{-1/2} U Sigma of the standardized residuals
// Z = D_r^{-1/2} (P - r c^T) D_c^{-1/2}, truncated to min(n_components, rank).
// When Z vanishes (independence) the result keeps min(n_components, N-1)
// all-zero columns.
EmbeddingMatrix correspondence_analysis(const CooccurrenceMatrix& k, const CaOptions& options = {});
EmbeddingMatrix correspondence_analysis(const Eigen::MatrixXd& counts,
                                        const std::vector<std::string>& names,
                                        int n_components);

// Z for a count matrix; exposed for diagnostics and for testing.
Eigen::MatrixXd standardized_residuals(const Eigen::MatrixXd& counts);

using SimilarityMatrix = Eigen::MatrixXd;

// Cosine similarity of embedding rows, exactly symmetric with unit diagonal.
SimilarityMatrix cosine_similarity(const EmbeddingMatrix& embedding);

void save_embedding(const EmbeddingMatrix& embedding, const std::filesystem::path& vectors,
                    const std::filesystem::path& inertia);
EmbeddingMatrix load_embedding(const std::filesystem::path& vectors,
                               const std::filesystem::path& inertia);

// Raw little-endian dump: int64 n, then n*n float64 row-major.
void save_similarity_binary(const SimilarityMatrix& s, const std::filesystem::path& path);

}  // namespace skillnet
