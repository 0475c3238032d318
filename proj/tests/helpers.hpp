#ifndef SPAMISS_TESTS_HELPERS_HPP
#define SPAMISS_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spamiss/mcmc.hpp"
#include "spamiss/model.hpp"
#include "spamiss/simgen.hpp"

namespace spamiss::testing {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance of a sample against a CDF.
inline double ks_distance(std::vector<double> draws, const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - f));
    d = std::max(d, std::abs(static_cast<double>(i) / n - f));
  }
  return d;
}

// Dense-grid moments of an unnormalized 1-d log-density (oracle for
// conditional-distribution checks).
struct GridPosterior {
  double mean = 0.0;
  double var = 0.0;
};

inline GridPosterior grid_posterior(const std::function<double(double)>& log_density, double lo,
                                    double hi, int n = 40001) {
  const double h = (hi - lo) / (n - 1);
  std::vector<double> logf(static_cast<std::size_t>(n));
  double max_log = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    logf[static_cast<std::size_t>(i)] = log_density(lo + i * h);
    max_log = std::max(max_log, logf[static_cast<std::size_t>(i)]);
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * h;
    const double w = std::exp(logf[static_cast<std::size_t>(i)] - max_log);
    z += w;
    m1 += w * x;
    m2 += w * x * x;
  }
  GridPosterior g;
  g.mean = m1 / z;
  g.var = m2 / z - g.mean * g.mean;
  return g;
}

// Batch-means Monte Carlo standard error of a chain mean.
inline double batch_mcse(const Vector& draws, int n_batches = 25) {
  const Eigen::Index b = draws.size() / n_batches;
  Vector means(n_batches);
  for (int k = 0; k < n_batches; ++k) means[k] = draws.segment(k * b, b).mean();
  const double grand = means.mean();
  const double var = (means.array() - grand).square().sum() / (n_batches - 1);
  return std::sqrt(var / n_batches);
}

// Dataset with no spatial structure and no missingness: y = X beta + noise.
inline SpatialDataset make_plain_dataset(Eigen::Index s_count, Eigen::Index n_per, Eigen::Index p,
                                         const Vector& beta, double noise_sd, Rng& rng) {
  Matrix coords(s_count, 2);
  std::vector<std::string> ids;
  for (Eigen::Index s = 0; s < s_count; ++s) {
    coords(s, 0) = rng.uniform() * 10.0;
    coords(s, 1) = rng.uniform() * 10.0;
    ids.push_back("L" + std::to_string(s + 1));
  }
  SpatialDataset data;
  data.locations = LocationSet::from_coords(ids, coords);
  for (Eigen::Index c = 0; c < p; ++c) data.covariate_names.push_back("x" + std::to_string(c + 1));
  for (Eigen::Index s = 0; s < s_count; ++s) {
    Matrix x(n_per, p);
    Vector y(n_per);
    for (Eigen::Index i = 0; i < n_per; ++i) {
      double mu = beta[0];
      for (Eigen::Index c = 0; c < p; ++c) {
        x(i, c) = rng.normal();
        mu += beta[c + 1] * x(i, c);
      }
      y[i] = mu + noise_sd * rng.normal();
    }
    data.x.push_back(std::move(x));
    data.y.push_back(std::move(y));
    data.observed.push_back(MaskMatrix::Ones(n_per, p));
  }
  return data;
}

// Intercept + all covariates, nothing spatial, nothing missing.
inline ModelSpec make_plain_spec(const SpatialDataset& data) {
  ModelSpec spec;
  for (Eigen::Index c = 0; c < data.n_covariates(); ++c) spec.response.predictors.push_back(c);
  spec.response.has_spatial_effect = false;
  return spec;
}

// The reference simulation model: spatial response and sub-models for x1, x2,
// with the (sigma, lambda) pairs fixed at their generating values when asked.
inline ModelSpec make_m1_spec(const SimTruths& truths, bool fixed) {
  ModelSpec spec;
  spec.response.predictors = {0, 1, 2};
  spec.response.has_spatial_effect = true;
  if (fixed) {
    spec.response.fixed_sigma = truths.sigma_y;
    spec.response.fixed_lambda = truths.lambda_y;
  }
  CovariateSubModel x1;
  x1.target = 0;
  x1.predictors = {2};
  x1.has_spatial_effect = true;
  if (fixed) {
    x1.fixed_sigma = truths.sigma_x1;
    x1.fixed_lambda = truths.lambda_x1;
  }
  CovariateSubModel x2;
  x2.target = 1;
  x2.predictors = {2, 0};
  x2.has_spatial_effect = true;
  if (fixed) {
    x2.fixed_sigma = truths.sigma_x2;
    x2.fixed_lambda = truths.lambda_x2;
  }
  spec.covariates = {x1, x2};
  spec.missingness.mechanism = Mechanism::mar;
  IndicatorModel r1;
  r1.target = 0;
  r1.terms = {{IndicatorTerm::Kind::covariate, 2}, {IndicatorTerm::Kind::response, 0}};
  IndicatorModel r2;
  r2.target = 1;
  r2.terms = {{IndicatorTerm::Kind::covariate, 2},
              {IndicatorTerm::Kind::response, 0},
              {IndicatorTerm::Kind::indicator, 0}};
  spec.missingness.models = {r1, r2};
  return spec;
}

inline SpatialDataset m1_masked_replicate(const SimDesign& design, const SimTruths& truths,
                                          std::uint64_t seed) {
  Rng data_rng = Rng(seed).fork("sim-data.0");
  Replicate rep = gen_replicate(design, truths, data_rng);
  Rng mask_rng = Rng(seed).fork("sim-mask.0");
  const auto mask = gen_missingness(rep, truths, mask_rng);
  apply_missingness(rep.data, mask);
  return rep.data;
}

// Scratch directory cleaned up at scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("spamiss_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace spamiss::testing

#endif
