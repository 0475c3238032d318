#ifndef SPAMISS_MCMC_HPP
#define SPAMISS_MCMC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spamiss/model.hpp"

namespace spamiss {

struct ChainConfig {
  long n_burnin = 2000;
  long n_kept = 1000;
  long thin = 5;  // iterations between kept draws
  std::uint64_t seed = 20260810;

  // Initial random-walk scales; adapted during burn-in only, frozen after.
  double step_sigma = 0.5;
  double step_lambda = 0.5;
  double step_phi = 0.2;
  long adapt_window = 50;
  double target_accept_scalar = 0.44;
  double target_accept_vector = 0.234;

  void check() const;
};

struct BlockReport {
  std::string block;
  double acceptance_rate;  // over post-burn-in proposals
  double final_step;       // NaN for independence-proposal blocks
  long proposals;
};

struct ChainOutput {
  std::vector<ParameterState> draws;
  // Per kept draw, per observation (location-major): log f(Y_i(s) | state).
  Matrix loglik_terms;
  // Per kept draw: -2 * sum of that draw's recorded likelihood terms, exactly.
  Vector deviance;
  std::vector<BlockReport> acceptance;
  // Metropolis step sizes at each kept draw; constant across rows once burn-in ends.
  Matrix step_trace;
  std::vector<std::string> step_block_names;
  std::vector<MissingCell> cells;
  bool phi_sampled = false;

  long n_kept() const { return static_cast<long>(draws.size()); }
};

/// Per-observation response log-likelihood terms at one state, flattened
/// location-major; `x` must already carry imputations.
Vector response_loglik_terms(const SpatialDataset& data, const std::vector<Matrix>& x,
                             const ModelSpec& spec, const ParameterState& state);

/// Conjugate posterior (shape, rate) for a precision with IG(a,b) prior on its
/// inverse: Gamma(a + n/2, b + ssr/2).
std::pair<double, double> gamma_posterior(double a, double b, long n, double ssr);

// Metropolis-within-Gibbs sampler for the joint posterior over regression
// coefficients, precisions, spatial effects, missingness coefficients and the
// missing covariate values. One instance owns one chain; each update block
// draws from its own seeded stream, so blocks are reproducible independently
// of one another.
class GibbsSampler {
 public:
  // `data` is held by reference and must outlive the sampler.
  GibbsSampler(const ModelSpec& spec, const SpatialDataset& data, const Priors& priors,
               const ChainConfig& config);

  /// Burn-in, thinned sweeps, recording; fully reproducible given the seed.
  ChainOutput run();

  // Individual blocks, exposed for targeted tests. Passing
  // with_likelihood = false turns a Metropolis block into a prior-only sampler.
  void impute_missing();
  void update_beta();
  void update_alpha(std::size_t l);
  void update_precision_y();
  void update_precision_x(std::size_t l);
  void update_sigma_y(bool with_likelihood = true);
  void update_sigma_x(std::size_t l, bool with_likelihood = true);
  void update_range_y(bool with_likelihood = true);
  void update_range_x(std::size_t l, bool with_likelihood = true);
  void update_spatial_y();
  void update_spatial_x(std::size_t l);
  void update_phi(bool with_likelihood = true);
  void sweep();

  ParameterState& state() { return state_; }
  const ParameterState& state() const { return state_; }
  const std::vector<Matrix>& covariates() const { return x_; }
  void set_adapting(bool adapting) { adapting_ = adapting; }
  double step(const std::string& block) const;

 private:
  struct SpatialCache {
    double lambda = -1.0;
    CholFactor cov_chol;
    Matrix precision;
  };
  struct MhBlock {
    std::string name;
    double step = 0.0;
    double target = 0.44;
    bool scaled = true;  // false: independence proposal, acceptance tracked only
    long window_proposals = 0;
    long window_accepts = 0;
    long batches = 0;
    long post_proposals = 0;
    long post_accepts = 0;
  };
  struct ResidualStats {
    Vector count;             // N_s
    Vector sum;               // per-location residual sums (spatial term excluded)
    Vector ssq_per_location;  // per-location residual sums of squares
    double ssq = 0.0;
  };

  Matrix design_matrix(Eigen::Index s, const std::vector<Eigen::Index>& predictors) const;
  ResidualStats residual_stats_y() const;
  ResidualStats residual_stats_x(std::size_t l) const;
  void draw_coefficients(const std::vector<Eigen::Index>& predictors, bool response,
                         std::size_t l, double psi, Rng& rng);
  void ensure_cache(SpatialCache& cache, const CorrelationFamily& family, double lambda) const;
  double w_prior_quad(const SpatialCache& cache, const Vector& w) const;
  void metropolis_track(MhBlock& block, bool accepted);
  double indicator_loglik(std::size_t model, const Vector& phi) const;
  double indicator_loglik_at(std::size_t model, Eigen::Index s, Eigen::Index i) const;
  double term_value(const IndicatorTerm& term, Eigen::Index s, Eigen::Index i) const;
  void update_sigma_block(double& sigma, const ResidualStats& stats, const Vector& w, double tau,
                          double psi, MhBlock& mh, Rng& rng, bool with_likelihood);
  void update_range_block(double& lambda, SpatialCache& cache, const CorrelationFamily& family,
                          const Vector& w, double psi, MhBlock& mh, Rng& rng,
                          bool with_likelihood);
  void record(ChainOutput& out, long k);

  ModelSpec spec_;
  Priors priors_;
  ChainConfig cfg_;
  const SpatialDataset& data_;

  std::vector<MissingCell> cells_;
  std::vector<Matrix> x_;
  ParameterState state_;

  SpatialCache cache_y_;
  std::vector<SpatialCache> cache_x_;

  // Resolved structure
  std::vector<Eigen::Index> submodel_of_col_;           // -1 when not a target
  std::vector<Eigen::Index> response_pos_of_col_;       // beta index or -1
  std::vector<std::vector<std::pair<std::size_t, Eigen::Index>>> downstream_of_col_;
  std::vector<std::vector<std::size_t>> indicators_using_col_;
  std::vector<std::vector<std::size_t>> indicators_using_w_;
  bool sample_phi_ = false;

  Rng rng_impute_, rng_beta_, rng_tau_y_, rng_sigma_y_, rng_lambda_y_, rng_w_y_;
  std::vector<Rng> rng_alpha_, rng_tau_x_, rng_sigma_x_, rng_lambda_x_, rng_w_x_, rng_phi_;

  MhBlock mh_sigma_y_, mh_lambda_y_, mh_impute_;
  std::vector<MhBlock> mh_sigma_x_, mh_lambda_x_, mh_w_x_, mh_phi_;

  bool adapting_ = false;
};

/// Full protocol over a validated spec/dataset pair.
ChainOutput run_chain(const ModelSpec& spec, const SpatialDataset& data, const Priors& priors,
                      const ChainConfig& config);

}  // namespace spamiss

#endif
