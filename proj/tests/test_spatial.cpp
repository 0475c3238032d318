#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spamiss/spatial.hpp"

using namespace spamiss;

namespace {

Matrix random_spd(Eigen::Index n, Rng& rng) {
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

// Centroid coordinates of the 12 provinces used by the reference analysis.
Matrix province_coords() {
  Matrix c(12, 2);
  c << 116.4107, 40.1849, 122.6090, 41.3037, 127.7824, 47.8415, 121.4037, 31.0846, 119.4554,
      32.9732, 118.1490, 36.3512, 113.6136, 33.8826, 112.2691, 30.9760, 111.7083, 27.6069,
      108.7872, 23.8279, 106.8738, 26.8152, 107.8748, 30.0587;
  return c;
}

}  // namespace

TEST_CASE("pairwise distances: 3-4-5 triangle and single point") {
  Matrix coords(2, 2);
  coords << 0.0, 0.0, 3.0, 4.0;
  const Matrix d = pairwise_distances(coords);
  CHECK(d(0, 0) == 0.0);
  CHECK(d(1, 1) == 0.0);
  CHECK(d(0, 1) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(d(1, 0) == d(0, 1));

  Matrix one(1, 2);
  one << 1.0, 1.0;
  const Matrix d1 = pairwise_distances(one);
  CHECK(d1.rows() == 1);
  CHECK(d1(0, 0) == 0.0);
}

TEST_CASE("pairwise distances: 12 province centroids") {
  // d(Beijing, Shanghai) computed by hand from the centroid table
  const Matrix d = pairwise_distances(province_coords());
  CHECK(d.rows() == 12);
  CHECK(d(0, 3) == doctest::Approx(10.380053424236).epsilon(1e-10));
  CHECK(d(10, 11) == doctest::Approx(3.394450360515).epsilon(1e-10));
  // triangle inequality over all triples
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      for (int k = 0; k < 12; ++k) CHECK(d(i, j) <= d(i, k) + d(k, j) + 1e-12);
}

TEST_CASE("pairwise distances: invalid input") {
  Matrix bad(1, 2);
  bad << std::numeric_limits<double>::quiet_NaN(), 0.0;
  CHECK_THROWS_AS(pairwise_distances(bad), InvalidInputError);
  Matrix empty(0, 2);
  CHECK_THROWS_AS(pairwise_distances(empty), InvalidInputError);
}

TEST_CASE("exponential correlation: forced values and monotonicity in range") {
  Matrix d(2, 2);
  d << 0.0, 5.0, 5.0, 0.0;
  const Matrix h = correlation_matrix(ExponentialRange{5.0}, d);
  CHECK(h(0, 0) == 1.0);
  CHECK(h(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(correlation_matrix(ExponentialRange{0.0}, d), InvalidParameterError);
  CHECK_THROWS_AS(correlation_matrix(ExponentialRange{-1.0}, d), InvalidParameterError);

  Rng rng(2);
  Matrix coords(6, 2);
  for (Eigen::Index i = 0; i < 6; ++i) {
    coords(i, 0) = rng.uniform() * 20.0;
    coords(i, 1) = rng.uniform() * 20.0;
  }
  const Matrix dist = pairwise_distances(coords);
  const Matrix h1 = correlation_matrix(ExponentialRange{2.0}, dist);
  const Matrix h2 = correlation_matrix(ExponentialRange{6.0}, dist);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j)
      if (i != j) CHECK(h2(i, j) >= h1(i, j));
}

TEST_CASE("CAR covariance: closed-form 2x2 and PD range") {
  Matrix d2(2, 2);
  d2 << 0.0, 1.0, 1.0, 0.0;
  const Matrix h = correlation_matrix(CarAdjacency{d2, 0.5}, Matrix());
  CHECK(h(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(h(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(h(1, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  // eigenvalues of this adjacency are +-1, so the PD range is (-1, 1)
  CHECK_THROWS_AS(correlation_matrix(CarAdjacency{d2, 1.0}, Matrix()), NotPositiveDefiniteError);
  CHECK_THROWS_AS(correlation_matrix(CarAdjacency{d2, 1.5}, Matrix()), NotPositiveDefiniteError);
  CHECK_NOTHROW(correlation_matrix(CarAdjacency{d2, -0.5}, Matrix()));

  Matrix asym(2, 2);
  asym << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(correlation_matrix(CarAdjacency{asym, 0.1}, Matrix()), InvalidInputError);
  Matrix diag(2, 2);
  diag << 1.0, 1.0, 1.0, 0.0;
  CHECK_THROWS_AS(correlation_matrix(CarAdjacency{diag, 0.1}, Matrix()), InvalidInputError);
}

TEST_CASE("CAR covariance times its precision is the identity") {
  // ring of 5 locations
  Matrix d = Matrix::Zero(5, 5);
  for (int i = 0; i < 5; ++i) {
    d(i, (i + 1) % 5) = 1.0;
    d((i + 1) % 5, i) = 1.0;
  }
  const double lambda = 0.3;
  const Matrix h = correlation_matrix(CarAdjacency{d, lambda}, Matrix());
  const Matrix q = Matrix::Identity(5, 5) - lambda * d;
  CHECK(((h * q) - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("cholesky: diagonal cases and reconstruction") {
  const CholFactor id = cholesky(Matrix::Identity(3, 3));
  CHECK((id.lower - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(id.log_det == 0.0);

  Matrix d(2, 2);
  d << 4.0, 0.0, 0.0, 9.0;
  const CholFactor f = cholesky(d);
  CHECK(f.lower(0, 0) == doctest::Approx(2.0));
  CHECK(f.lower(1, 1) == doctest::Approx(3.0));
  CHECK(f.log_det == doctest::Approx(std::log(36.0)).epsilon(1e-14));

  Rng rng(4);
  const Matrix m = random_spd(5, rng);
  const CholFactor g = cholesky(m);
  const Matrix rec = g.lower * g.lower.transpose();
  CHECK((rec - m).norm() / m.norm() < 1e-10);
  CHECK(g.log_det == doctest::Approx(std::log(m.determinant())).epsilon(1e-9));
}

TEST_CASE("cholesky: failures") {
  Matrix neg(2, 2);
  neg << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(cholesky(neg), NotPositiveDefiniteError);
  CHECK_THROWS_AS(cholesky(Matrix::Zero(2, 2)), NotPositiveDefiniteError);
  CHECK_THROWS_AS(cholesky(Matrix::Zero(2, 3)), InvalidInputError);
  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cholesky(nan), InvalidInputError);
}

TEST_CASE("mvn_logpdf: scalar cases") {
  const CholFactor f = cholesky(Matrix::Identity(1, 1));
  Vector x(1), mu(1);
  x << 0.0;
  mu << 0.0;
  const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);
  CHECK(mvn_logpdf(x, mu, f) == doctest::Approx(-half_log_2pi).epsilon(1e-14));
  x << 1.0;
  CHECK(mvn_logpdf(x, mu, f) == doctest::Approx(-half_log_2pi - 0.5).epsilon(1e-14));
  Vector wrong(2);
  CHECK_THROWS_AS(mvn_logpdf(wrong, mu, f), InvalidInputError);
}

TEST_CASE("mvn_logpdf matches the direct quadratic-form formula") {
  Rng rng(8);
  for (Eigen::Index n = 2; n <= 8; ++n) {
    const Matrix sigma = random_spd(n, rng);
    const CholFactor f = cholesky(sigma);
    Vector x(n), mu(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = rng.normal();
      mu[i] = rng.normal();
    }
    // brute force with an explicit inverse and determinant
    const double direct = -0.5 * (n * std::log(2.0 * M_PI) + std::log(sigma.determinant()) +
                                  (x - mu).dot(sigma.inverse() * (x - mu)));
    CHECK(mvn_logpdf(x, mu, f) == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("mvn_sample: determinism and Monte Carlo moments") {
  const CholFactor f = cholesky(Matrix::Identity(2, 2));
  Vector mu = Vector::Zero(2);
  Rng a(99), b(99);
  CHECK(mvn_sample(mu, f, a) == mvn_sample(mu, f, b));

  Rng rng(100);
  const int n = 100000;
  Matrix cov = Matrix::Zero(2, 2);
  Vector mean = Vector::Zero(2);
  std::vector<Vector> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) {
    draws.push_back(mvn_sample(mu, f, rng));
    mean += draws.back() / n;
  }
  for (const auto& z : draws) cov += (z - mean) * (z - mean).transpose() / n;
  CHECK((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);

  const double c = 2.5;
  Vector shifted = Vector::Constant(2, c);
  Rng rng2(101);
  double m0 = 0.0;
  for (int i = 0; i < n; ++i) m0 += mvn_sample(shifted, f, rng2)[0] / n;
  CHECK(std::abs(m0 - c) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("chol_solve and chol_inverse") {
  Rng rng(12);
  const Matrix m = random_spd(4, rng);
  const CholFactor f = cholesky(m);
  Vector b(4);
  b << 1.0, -2.0, 0.5, 3.0;
  CHECK((m * chol_solve(f, b) - b).norm() < 1e-10);
  CHECK((m * chol_inverse(f) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("LocationSet wires ids, coords and distances together") {
  Matrix coords(2, 2);
  coords << 0.0, 0.0, 3.0, 4.0;
  const LocationSet ls = LocationSet::from_coords({"a", "b"}, coords);
  CHECK(ls.size() == 2);
  CHECK(ls.dist(0, 1) == doctest::Approx(5.0));
  CHECK_THROWS_AS(LocationSet::from_coords({"a"}, coords), InvalidInputError);
}
