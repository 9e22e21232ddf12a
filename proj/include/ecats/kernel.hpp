#pragma once

// Kernel between STL formulae: the L2 inner product of their robustness
// functionals under the trajectory measure mu0, estimated by Monte Carlo over
// a fixed set of sampled base trajectories. Kernel PCA turns a Gram matrix
// into finite-dimensional formula embeddings.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecats/error.hpp"
#include "ecats/stl.hpp"
#include "ecats/stl_eval.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::stl_kernel {

using stl::Formula;

/// Robustness is clamped to [-clamp, clamp] before any product so that
/// infinite values (e.g. of `true`) keep the integral finite.
inline constexpr double kDefaultClamp = 200.0;
inline constexpr std::size_t kDefaultBasisSize = 5000;
inline constexpr double kEigenFloor = 1e-10;

/// Monte Carlo sample set standing in for mu0.
struct SignatureBasis {
  std::vector<Trajectory> trajectories;
  Mu0Params params;
  std::uint64_t seed = 0;
  double clamp = kDefaultClamp;

  static SignatureBasis sample(const Mu0Params& params, std::size_t count, std::uint64_t seed,
                               double clamp = kDefaultClamp) {
    if (count < 1) throw ConfigError("signature basis needs at least one trajectory");
    return {sample_mu0_batch(params, count, seed), params, seed, clamp};
  }

  std::size_t size() const noexcept { return trajectories.size(); }
  std::size_t dims() const noexcept { return trajectories.empty() ? 0 : trajectories.front().dims(); }
};

/// r_j = clamp(rho(phi, xi_j, 0)) over the basis.
inline Eigen::VectorXd robustness_vector(const Formula& phi, std::span<const Trajectory> trajectories,
                                         double clamp = kDefaultClamp) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(trajectories.size()));
  for (std::size_t j = 0; j < trajectories.size(); ++j)
    r[static_cast<Eigen::Index>(j)] = std::clamp(stl::robustness(phi, trajectories[j], 0), -clamp, clamp);
  return r;
}

inline Eigen::VectorXd robustness_vector(const Formula& phi, const SignatureBasis& basis) {
  return robustness_vector(phi, basis.trajectories, basis.clamp);
}

/// Cosine of two robustness vectors. sqrt(a*a) == a in IEEE arithmetic, which
/// makes the self-similarity exactly 1 and the similarity to a negation exactly -1.
inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double aa = a.squaredNorm(), bb = b.squaredNorm();
  if (aa == 0.0 || bb == 0.0) throw EvalError("cannot normalize a zero robustness vector");
  return std::clamp(a.dot(b) / std::sqrt(aa * bb), -1.0, 1.0);
}

/// Monte Carlo estimate of the kernel; the cosine-normalized variant when `normalized`.
inline double kernel(const Formula& phi, const Formula& psi, const SignatureBasis& basis, bool normalized = true) {
  const Eigen::VectorXd a = robustness_vector(phi, basis), b = robustness_vector(psi, basis);
  if (normalized) return cosine(a, b);
  return a.dot(b) / static_cast<double>(basis.size());
}

struct GramMatrix {
  Eigen::MatrixXd values;
  bool normalized = true;
  /// Rows are the clamped robustness vectors the matrix was built from
  /// (C x B); needed to embed formulae outside the training set.
  Eigen::MatrixXd features;
  double clamp = kDefaultClamp;

  Eigen::Index size() const noexcept { return values.rows(); }
};

/// Gram matrix from precomputed robustness vectors (one per row).
inline GramMatrix gram_from_features(Eigen::MatrixXd features, bool normalized = true,
                                     double clamp = kDefaultClamp) {
  const Eigen::Index c = features.rows();
  const double b = static_cast<double>(features.cols());
  // Contiguous columns so the sums match kernel() bit for bit.
  const Eigen::MatrixXd cols = features.transpose();
  Eigen::MatrixXd k(c, c);
  Eigen::VectorXd sq(c);
  for (Eigen::Index i = 0; i < c; ++i) sq[i] = cols.col(i).squaredNorm();
  for (Eigen::Index i = 0; i < c; ++i) {
    if (normalized && sq[i] == 0.0)
      throw EvalError("gram: formula " + std::to_string(i) + " has zero robustness on the whole basis");
    for (Eigen::Index j = i; j < c; ++j) {
      double v;
      if (normalized) {
        v = i == j ? 1.0 : std::clamp(cols.col(i).dot(cols.col(j)) / std::sqrt(sq[i] * sq[j]), -1.0, 1.0);
      } else {
        v = cols.col(i).dot(cols.col(j)) / b;
      }
      k(i, j) = k(j, i) = v;
    }
  }
  return {std::move(k), normalized, std::move(features), clamp};
}

inline Eigen::MatrixXd robustness_features(std::span<const Formula> formulas, const SignatureBasis& basis) {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(formulas.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < formulas.size(); ++i)
    f.row(static_cast<Eigen::Index>(i)) = robustness_vector(formulas[i], basis).transpose();
  return f;
}

inline GramMatrix gram(std::span<const Formula> formulas, const SignatureBasis& basis, bool normalized = true) {
  if (formulas.empty()) throw ConfigError("gram: empty formula list");
  return gram_from_features(robustness_features(formulas, basis), normalized, basis.clamp);
}

struct KpcaModel {
  Eigen::VectorXd eigenvalues;   // retained, non-increasing
  Eigen::MatrixXd eigenvectors;  // C x d, unit columns
  Eigen::MatrixXd embeddings;    // C x d training embeddings
  Eigen::VectorXd spectrum;      // full centered spectrum, non-increasing
  Eigen::VectorXd column_mean;   // of the uncentered Gram matrix
  double total_mean = 0.0;
  Eigen::MatrixXd features;      // training robustness vectors
  Eigen::VectorXd feature_sq_norm;
  bool normalized = true;
  double clamp = kDefaultClamp;

  Eigen::Index dim() const noexcept { return eigenvalues.size(); }
  Eigen::Index rank() const noexcept { return (spectrum.array() > kEigenFloor).count(); }

  /// Fraction of the positive spectrum captured by the leading `d` components.
  double spectral_mass(Eigen::Index d) const {
    const double total = spectrum.array().max(0.0).sum();
    return total > 0 ? spectrum.head(std::min(d, spectrum.size())).array().max(0.0).sum() / total : 0.0;
  }
};

/// Kernel PCA: double-center, eigendecompose, keep the `d` leading components.
inline KpcaModel kpca_fit(const GramMatrix& gram, Eigen::Index d) {
  const Eigen::Index c = gram.size();
  if (c < 1) throw ConfigError("kpca: empty Gram matrix");
  if (d < 1) throw ConfigError("kpca: embedding dimension must be >= 1");
  KpcaModel m;
  m.normalized = gram.normalized;
  m.clamp = gram.clamp;
  m.features = gram.features;
  m.feature_sq_norm = gram.features.rowwise().squaredNorm();
  m.column_mean = gram.values.colwise().mean().transpose();
  m.total_mean = m.column_mean.mean();

  Eigen::MatrixXd centered = gram.values;
  centered.rowwise() -= m.column_mean.transpose();
  centered.colwise() -= m.column_mean;
  centered.array() += m.total_mean;
  centered = 0.5 * (centered + centered.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered);
  if (solver.info() != Eigen::Success) throw Error("kpca: eigendecomposition failed");
  // Eigen returns ascending order.
  m.spectrum = solver.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const Eigen::Index rank = m.rank();
  if (d > rank)
    throw ConfigError("kpca: embedding dimension " + std::to_string(d) + " exceeds the numerical rank; usable rank is " +
                      std::to_string(rank));
  m.eigenvalues = m.spectrum.head(d);
  m.eigenvectors = vectors.leftCols(d);
  // Fix the sign of each component for reproducibility: largest-magnitude entry positive.
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index arg;
    m.eigenvectors.col(k).cwiseAbs().maxCoeff(&arg);
    if (m.eigenvectors(arg, k) < 0) m.eigenvectors.col(k) *= -1.0;
  }
  m.embeddings = m.eigenvectors * m.eigenvalues.cwiseSqrt().asDiagonal();
  return m;
}

/// Embedding of an arbitrary formula given its kernel column against the training set.
inline Eigen::VectorXd kpca_embed_column(const KpcaModel& m, const Eigen::VectorXd& column) {
  Eigen::VectorXd centered = column - m.column_mean;
  centered.array() += m.total_mean - column.mean();
  return (m.eigenvectors.transpose() * centered).cwiseQuotient(m.eigenvalues.cwiseSqrt());
}

inline Eigen::VectorXd kpca_embed(const KpcaModel& m, const Formula& phi, const SignatureBasis& basis) {
  if (basis.size() != static_cast<std::size_t>(m.features.cols()))
    throw ShapeError("kpca_embed: basis size differs from the fitted model");
  const Eigen::VectorXd r = robustness_vector(phi, basis);
  const double rr = r.squaredNorm();
  if (m.normalized && rr == 0.0) throw EvalError("kpca_embed: formula has zero robustness on the basis");
  Eigen::VectorXd column(m.features.rows());
  for (Eigen::Index j = 0; j < column.size(); ++j) {
    const double dot = m.features.row(j).dot(r);
    column[j] = m.normalized ? std::clamp(dot / std::sqrt(rr * m.feature_sq_norm[j]), -1.0, 1.0)
                             : dot / static_cast<double>(r.size());
  }
  return kpca_embed_column(m, column);
}

/// Cosine similarity of two embedding vectors.
inline double kernel_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ShapeError("kernel_similarity: dimension mismatch");
  return cosine(a, b);
}

}  // namespace ecats::stl_kernel
