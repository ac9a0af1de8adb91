#include "skillnet/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "skillnet/csv.hpp"
#include "skillnet/error.hpp"

namespace skillnet {

namespace {

constexpr double kRankTolerance = 1e-10;

struct Masses {
  Eigen::VectorXd row;
  Eigen::VectorXd col;
  double total = 0.0;
};

Masses masses(const Eigen::MatrixXd& counts, const std::vector<std::string>* names) {
  if ((counts.array() < 0.0).any()) throw ArgumentError("count matrix has negative entries");
  Masses m;
  m.total = counts.sum();
  if (!(m.total > 0.0)) throw DegenerateError("count matrix has zero grand total");
  m.row = counts.rowwise().sum() / m.total;
  m.col = counts.colwise().sum().transpose() / m.total;
  for (Eigen::Index i = 0; i < m.row.size(); ++i) {
    if (!(m.row(i) > 0.0)) {
      const std::string who = names && static_cast<std::size_t>(i) < names->size()
                                  ? "'" + (*names)[i] + "'"
                                  : "row " + std::to_string(i);
      throw DegenerateError("skill " + who + " has no co-occurrence mass");
    }
  }
  for (Eigen::Index j = 0; j < m.col.size(); ++j) {
    if (!(m.col(j) > 0.0)) throw DegenerateError("column " + std::to_string(j) + " has zero mass");
  }
  return m;
}

Eigen::MatrixXd residuals(const Eigen::MatrixXd& counts, const Masses& m) {
  const Eigen::VectorXd rs = m.row.cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd cs = m.col.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd z = counts / m.total - m.row * m.col.transpose();
  return rs.asDiagonal() * z * cs.asDiagonal();
}

bool is_symmetric(const Eigen::MatrixXd& z) {
  if (z.rows() != z.cols()) return false;
  const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
  return (z - z.transpose()).cwiseAbs().maxCoeff() <= 1e-13 * scale;
}

// Left singular vectors and singular values of z, descending.
void singular_pairs(const Eigen::MatrixXd& z, Eigen::MatrixXd& u, Eigen::VectorXd& sigma) {
  if (is_symmetric(z)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (z + z.transpose()));
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    std::vector<Eigen::Index> order(lambda.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(lambda(a)) > std::abs(lambda(b));
    });
    u.resize(z.rows(), lambda.size());
    sigma.resize(lambda.size());
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
      u.col(k) = eig.eigenvectors().col(order[k]);
      sigma(k) = std::abs(lambda(order[k]));
    }
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU);
    u = svd.matrixU();
    sigma = svd.singularValues();
  }
}

}  // namespace

double EmbeddingMatrix::cumulative_inertia() const {
  return std::accumulate(inertia_fractions.begin(), inertia_fractions.end(), 0.0);
}

Eigen::MatrixXd standardized_residuals(const Eigen::MatrixXd& counts) {
  return residuals(counts, masses(counts, nullptr));
}

EmbeddingMatrix correspondence_analysis(const Eigen::MatrixXd& counts,
                                        const std::vector<std::string>& names,
                                        int n_components) {
  if (n_components < 1) {
    throw ArgumentError("n_components must be >= 1, got " + std::to_string(n_components));
  }
  const Masses m = masses(counts, &names);
  const Eigen::MatrixXd z = residuals(counts, m);

  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
  singular_pairs(z, u, sigma);

  EmbeddingMatrix out;
  out.skill_names = names;
  out.total_inertia = z.squaredNorm();

  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > kRankTolerance) ++rank;

  const Eigen::Index n = counts.rows();
  if (rank == 0) {
    const Eigen::Index d = std::max<Eigen::Index>(1, std::min<Eigen::Index>(n_components, n - 1));
    out.vectors = Eigen::MatrixXd::Zero(n, d);
    out.inertia_fractions.assign(static_cast<std::size_t>(d), 0.0);
    return out;
  }

  const Eigen::Index d = std::min<Eigen::Index>(n_components, rank);
  const Eigen::VectorXd inv_sqrt_row = m.row.cwiseSqrt().cwiseInverse();
  out.vectors.resize(n, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::VectorXd col = u.col(k);
    Eigen::Index pivot = 0;
    col.cwiseAbs().maxCoeff(&pivot);
    if (col(pivot) < 0.0) col = -col;
    out.vectors.col(k) = inv_sqrt_row.cwiseProduct(col) * sigma(k);
    out.inertia_fractions.push_back(sigma(k) * sigma(k) / out.total_inertia);
  }
  return out;
}

EmbeddingMatrix correspondence_analysis(const CooccurrenceMatrix& k, const CaOptions& options) {
  Eigen::MatrixXd counts = k.counts.cast<double>();
  if (!options.include_diagonal) counts.diagonal().setZero();
  return correspondence_analysis(counts, k.vocabulary.names(), options.n_components);
}

SimilarityMatrix cosine_similarity(const EmbeddingMatrix& embedding) {
  const Eigen::MatrixXd& v = embedding.vectors;
  Eigen::MatrixXd unit(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double norm = v.row(i).norm();
    if (!(norm > 0.0)) {
      const std::string who = static_cast<std::size_t>(i) < embedding.skill_names.size()
                                  ? "'" + embedding.skill_names[i] + "'"
                                  : "row " + std::to_string(i);
      throw DegenerateError("embedding of skill " + who + " has zero norm");
    }
    unit.row(i) = v.row(i) / norm;
  }
  SimilarityMatrix s = unit * unit.transpose();
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    s(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < s.cols(); ++j) {
      const double value = std::clamp(0.5 * (s(i, j) + s(j, i)), -1.0, 1.0);
      s(i, j) = value;
      s(j, i) = value;
    }
  }
  return s;
}

void save_embedding(const EmbeddingMatrix& embedding, const std::filesystem::path& vectors,
                    const std::filesystem::path& inertia) {
  {
    std::ofstream out(vectors, std::ios::binary);
    if (!out) throw IoError("cannot write " + vectors.string());
    csv::Row header{"skill"};
    for (Eigen::Index k = 0; k < embedding.vectors.cols(); ++k) header.push_back("v" + std::to_string(k + 1));
    csv::write_row(out, header);
    for (Eigen::Index i = 0; i < embedding.vectors.rows(); ++i) {
      csv::Row row{embedding.skill_names.at(static_cast<std::size_t>(i))};
      for (Eigen::Index k = 0; k < embedding.vectors.cols(); ++k) {
        row.push_back(csv::format_double(embedding.vectors(i, k)));
      }
      csv::write_row(out, row);
    }
  }
  std::ofstream out(inertia, std::ios::binary);
  if (!out) throw IoError("cannot write " + inertia.string());
  csv::write_row(out, {"component", "fraction", "cumulative"});
  double cumulative = 0.0;
  for (std::size_t k = 0; k < embedding.inertia_fractions.size(); ++k) {
    cumulative += embedding.inertia_fractions[k];
    csv::write_row(out, {std::to_string(k + 1), csv::format_double(embedding.inertia_fractions[k]),
                         csv::format_double(cumulative)});
  }
}

EmbeddingMatrix load_embedding(const std::filesystem::path& vectors,
                               const std::filesystem::path& inertia) {
  EmbeddingMatrix e;
  const auto table = csv::read_table(vectors);
  if (table.header.empty() || table.header[0] != "skill") {
    throw FormatError(vectors.string() + ": embedding header must start with 'skill'");
  }
  const auto d = static_cast<Eigen::Index>(table.header.size() - 1);
  e.vectors.resize(static_cast<Eigen::Index>(table.rows.size()), d);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) throw FormatError(vectors.string() + ": ragged row");
    e.skill_names.push_back(row[0]);
    for (Eigen::Index k = 0; k < d; ++k) {
      e.vectors(static_cast<Eigen::Index>(i), k) = csv::parse_double(row[k + 1]);
    }
  }
  const auto fractions = csv::read_table(inertia);
  const int col = fractions.column("fraction");
  if (col < 0) throw FormatError(inertia.string() + ": missing fraction column");
  for (const auto& row : fractions.rows) e.inertia_fractions.push_back(csv::parse_double(row.at(col)));
  return e;
}

void save_similarity_binary(const SimilarityMatrix& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::int64_t n = s.rows();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = s;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * rm.size()));
}

}  // namespace skillnet
