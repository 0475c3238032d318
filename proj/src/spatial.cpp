#include "spamiss/spatial.hpp"

#include <cmath>

namespace spamiss {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void check_adjacency(const Matrix& d) {
  if (d.rows() != d.cols()) throw InvalidInputError("CAR adjacency must be square");
  if (!d.allFinite()) throw InvalidInputError("CAR adjacency has non-finite entries");
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0) throw InvalidInputError("CAR adjacency must have zero diagonal");
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (d(i, j) != d(j, i)) throw InvalidInputError("CAR adjacency must be symmetric");
  }
}

}  // namespace

LocationSet LocationSet::from_coords(std::vector<std::string> ids, Matrix coords) {
  if (static_cast<Eigen::Index>(ids.size()) != coords.rows())
    throw InvalidInputError("LocationSet: ids and coords disagree in length");
  LocationSet out;
  out.dist = pairwise_distances(coords);
  out.ids = std::move(ids);
  out.coords = std::move(coords);
  return out;
}

Matrix correlation_matrix(const CorrelationStructure& structure, const Matrix& dist) {
  if (const auto* e = std::get_if<ExponentialRange>(&structure)) {
    if (dist.rows() != dist.cols())
      throw InvalidInputError("correlation_matrix: distance matrix must be square");
    return exponential_correlation(dist, e->range);
  }
  const auto& car = std::get<CarAdjacency>(structure);
  check_adjacency(car.adjacency);
  const Eigen::Index s = car.adjacency.rows();
  Matrix q = Matrix::Identity(s, s) - car.coefficient * car.adjacency;
  // Cholesky doubles as the positive-definite range check on lambda.
  CholFactor f = cholesky(q);
  return chol_inverse(f);
}

CholFactor cholesky(const Matrix& m, double pivot_tol) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw InvalidInputError("cholesky: matrix must be square");
  if (!m.allFinite()) throw InvalidInputError("cholesky: non-finite entries");
  CholFactor out;
  out.lower = Matrix::Zero(n, n);
  Matrix& l = out.lower;
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > pivot_tol)) throw NotPositiveDefiniteError("cholesky: pivot below tolerance");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    log_det += 2.0 * std::log(ljj);
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
  }
  out.log_det = log_det;
  return out;
}

double mvn_logpdf(const Vector& x, const Vector& mean, const CholFactor& chol) {
  const Eigen::Index n = chol.dim();
  if (x.size() != n || mean.size() != n)
    throw InvalidInputError("mvn_logpdf: dimension mismatch");
  Vector z = chol.lower.triangularView<Eigen::Lower>().solve(x - mean);
  return -0.5 * (n * kLogTwoPi + chol.log_det + z.squaredNorm());
}

Vector mvn_sample(const Vector& mean, const CholFactor& chol, Rng& rng) {
  if (mean.size() != chol.dim()) throw InvalidInputError("mvn_sample: dimension mismatch");
  return mean + chol.lower * rng.normal_vector(chol.dim());
}

Vector chol_solve(const CholFactor& chol, const Vector& b) {
  Vector z = chol.lower.triangularView<Eigen::Lower>().solve(b);
  return chol.lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

Matrix chol_inverse(const CholFactor& chol) {
  const Eigen::Index n = chol.dim();
  Matrix inv = chol.lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  return chol.lower.transpose().triangularView<Eigen::Upper>().solve(inv);
}

}  // namespace spamiss
