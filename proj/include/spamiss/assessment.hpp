#ifndef SPAMISS_ASSESSMENT_HPP
#define SPAMISS_ASSESSMENT_HPP

#include <string>
#include <vector>

#include "spamiss/mcmc.hpp"

namespace spamiss {

/// Response-model deviance at one state: -2 sum_s log MVN(Y(s); X(s)'beta +
/// sigma_y W_y(s) 1, tau_y^{-1} I), with imputations taken from the state.
double deviance(const ParameterState& state, const SpatialDataset& data, const ModelSpec& spec);

/// Elementwise posterior mean of every chain draw (coefficients, precisions,
/// spatial effects and imputations averaged cell by cell).
ParameterState posterior_mean_state(const ChainOutput& chain);

/// Modified DIC: 2 E[Dev] - Dev at the posterior means of the parameters and
/// the missing covariates. Smaller is better.
double mdic(const ChainOutput& chain, const SpatialDataset& data, const ModelSpec& spec);

struct MlpmlResult {
  double mlpml = 0.0;
  Vector mcpo;  // per observation, location-major
};

/// Harmonic-mean estimate of the per-observation mCPO and their summed logs.
/// Larger mLPML is better. Throws DegenerateLikelihoodError when a recorded
/// likelihood is zero.
MlpmlResult mlpml(const ChainOutput& chain);

/// DIC over the Bernoulli-logit likelihood of the missingness indicators alone,
/// same 2 E[Dev] - Dev(means) template. Requires phi draws.
double dic_r(const ChainOutput& chain, const SpatialDataset& data, const ModelSpec& spec);

/// Indicator-model deviance -2 log f(R | phi, X, Y, W) at one state.
double indicator_deviance(const ParameterState& state, const SpatialDataset& data,
                          const ModelSpec& spec);

struct SummaryRow {
  std::string parameter;
  double mean = 0.0;
  double sd = 0.0;
  double hpd_lo = 0.0;
  double hpd_hi = 0.0;
};

/// Mean, sample SD (divisor T-1) and the shortest contiguous window holding
/// ceil(0.95 T) sorted draws.
SummaryRow summary_row(const std::string& name, const Vector& draws, double level = 0.95);

/// Named scalar draw series of a chain: coefficients, precisions, sigmas,
/// lambdas, spatial effects, phi and imputations, in draw-file column order.
std::vector<std::pair<std::string, Vector>> chain_series(const ChainOutput& chain,
                                                         const SpatialDataset& data,
                                                         const ModelSpec& spec);

/// Posterior summary table for the model parameters (latent fields and
/// imputations excluded; free lambdas reported on the log scale as well).
std::vector<SummaryRow> summarize_chain(const ChainOutput& chain, const SpatialDataset& data,
                                        const ModelSpec& spec);

struct ReplicateEstimate {
  double mean = 0.0;
  double sd = 0.0;
  double hpd_lo = 0.0;
  double hpd_hi = 0.0;
};

struct SimMetrics {
  double bias = 0.0;
  double sd = 0.0;
  double mse = 0.0;
  double cp = 0.0;
};

/// Bias, average posterior SD, MSE and HPD coverage over replicates.
SimMetrics sim_metrics(const std::vector<ReplicateEstimate>& estimates, double truth);

}  // namespace spamiss

#endif
