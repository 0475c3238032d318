#ifndef SPAMISS_SPATIAL_HPP
#define SPAMISS_SPATIAL_HPP

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "spamiss/errors.hpp"
#include "spamiss/rng.hpp"

namespace spamiss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Pairwise Euclidean distances between the rows of `coords` (S x k).
/// Symmetric, zero diagonal. Throws InvalidInputError on empty or non-finite input.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> pairwise_distances(
    const Eigen::MatrixBase<Derived>& coords) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index s = coords.rows();
  if (s < 1) throw InvalidInputError("pairwise_distances: need at least one coordinate");
  if (!coords.allFinite()) throw InvalidInputError("pairwise_distances: non-finite coordinate");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d(s, s);
  d.setZero();
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = i + 1; j < s; ++j) {
      const Scalar dij = (coords.row(i) - coords.row(j)).norm();
      d(i, j) = dij;
      d(j, i) = dij;
    }
  return d;
}

/// Exponential correlation in range form: entry (s,s') = exp(-d_{ss'} / range).
/// Larger range means longer-range (stronger) correlation.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> exponential_correlation(
    const Eigen::MatrixBase<Derived>& dist, typename Derived::Scalar range) {
  if (!(range > 0)) throw InvalidParameterError("exponential_correlation: range must be > 0");
  return (-dist / range).array().exp().matrix();
}

// Point-referenced sites: labels, planar coordinates, full distance matrix.
struct LocationSet {
  std::vector<std::string> ids;
  Matrix coords;  // S x 2
  Matrix dist;    // S x S

  static LocationSet from_coords(std::vector<std::string> ids, Matrix coords);
  Eigen::Index size() const { return coords.rows(); }
};

struct ExponentialRange {
  double range;  // > 0
};

struct CarAdjacency {
  Matrix adjacency;    // S x S binary, symmetric, zero diagonal
  double coefficient;  // strictly inside (1/e_min, 1/e_max) of the adjacency spectrum
};

using CorrelationStructure = std::variant<ExponentialRange, CarAdjacency>;

/// Builds the SPD correlation/covariance matrix for the given structure.
/// Exponential uses `dist`; CAR ignores it and returns (I - lambda*D)^{-1}.
Matrix correlation_matrix(const CorrelationStructure& structure, const Matrix& dist);

// Lower Cholesky factor together with the log-determinant of the factored matrix.
struct CholFactor {
  Matrix lower;
  double log_det = 0.0;
  Eigen::Index dim() const { return lower.rows(); }
};

/// Lower-triangular Cholesky of a symmetric positive definite matrix.
/// Throws NotPositiveDefiniteError when any pivot falls at or below `pivot_tol`;
/// no jitter is ever added, callers that sample over the matrix reject instead.
CholFactor cholesky(const Matrix& m, double pivot_tol = 1e-12);

double mvn_logpdf(const Vector& x, const Vector& mean, const CholFactor& chol);
Vector mvn_sample(const Vector& mean, const CholFactor& chol, Rng& rng);

/// Solve (L L') x = b given the lower factor.
Vector chol_solve(const CholFactor& chol, const Vector& b);
/// Inverse of the factored matrix.
Matrix chol_inverse(const CholFactor& chol);

}  // namespace spamiss

#endif
