#ifndef SPAMISS_MODEL_HPP
#define SPAMISS_MODEL_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spamiss/spatial.hpp"

namespace spamiss {

using MaskMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;  // 1 = observed

// Point-referenced responses and covariates, grouped by location.
// Covariate columns are ordered with the missing-prone ones first; cells masked
// missing carry NaN and must never reach likelihood code without imputation.
struct SpatialDataset {
  LocationSet locations;
  std::vector<std::string> covariate_names;  // size p
  std::vector<Vector> y;                     // per location, length N_s
  std::vector<Matrix> x;                     // per location, N_s x p (NaN where masked)
  std::vector<MaskMatrix> observed;          // per location, N_s x p

  Eigen::Index n_locations() const { return locations.size(); }
  Eigen::Index n_covariates() const { return static_cast<Eigen::Index>(covariate_names.size()); }
  Eigen::Index n_obs(Eigen::Index s) const { return y[static_cast<std::size_t>(s)].size(); }
  Eigen::Index total_n() const;
  Eigen::Index column_index(const std::string& name) const;  // -1 when absent
};

// One masked-missing cell, addressed as (location, row within location, column).
struct MissingCell {
  Eigen::Index location;
  Eigen::Index row;
  Eigen::Index column;
};

/// All masked cells in the canonical order (location, row, column ascending).
/// ParameterState::imputed, the draw files, and the sampler all share this order.
std::vector<MissingCell> missing_cells(const SpatialDataset& data);

/// Covariate matrices with the current imputations written into the masked cells.
std::vector<Matrix> complete_covariates(const SpatialDataset& data,
                                        const std::vector<MissingCell>& cells,
                                        const Vector& imputed);

/// Rows (over all locations) with every covariate observed; used by CC mode.
SpatialDataset complete_cases(const SpatialDataset& data);

enum class CorrelationKind { exponential, car };

// Correlation family for one spatial effect; the range/coefficient parameter
// itself lives in ParameterState.
struct CorrelationFamily {
  CorrelationKind kind = CorrelationKind::exponential;
  Matrix adjacency;  // CAR only

  CorrelationStructure at(double lambda) const {
    if (kind == CorrelationKind::exponential) return ExponentialRange{lambda};
    return CarAdjacency{adjacency, lambda};
  }
};

struct ResponseModel {
  std::vector<Eigen::Index> predictors;  // covariate columns; intercept is implicit
  bool has_spatial_effect = true;
  CorrelationFamily correlation;
  std::optional<double> fixed_sigma;   // set = skip the sigma update block
  std::optional<double> fixed_lambda;  // set = skip the lambda update block
};

// One conditional distribution in the sequential covariate factorization.
// Listed order is the conditional order: a target may use as predictors any
// fully observed column plus targets listed before it.
struct CovariateSubModel {
  Eigen::Index target = 0;
  std::vector<Eigen::Index> predictors;
  bool has_spatial_effect = true;
  CorrelationFamily correlation;
  std::optional<double> fixed_sigma;
  std::optional<double> fixed_lambda;
};

enum class Mechanism { mar, mnar };

// One additive term of a missingness logistic predictor (intercept implicit).
struct IndicatorTerm {
  enum class Kind { covariate, response, indicator, spatial_effect };
  Kind kind = Kind::covariate;
  // covariate: column index; indicator: target column of an earlier indicator
  // model; spatial_effect: target column of a spatial covariate sub-model.
  Eigen::Index index = 0;
};

struct IndicatorModel {
  Eigen::Index target = 0;  // missing-prone column whose indicator this models
  std::vector<IndicatorTerm> terms;
};

struct MissingnessSpec {
  Mechanism mechanism = Mechanism::mar;
  std::vector<IndicatorModel> models;  // listed order = conditional order
  // Under MAR the mechanism factorizes out of the posterior; phi is sampled
  // only when asked for. MNAR always samples phi.
  bool sample_phi = false;
};

struct ModelSpec {
  ResponseModel response;
  std::vector<CovariateSubModel> covariates;
  MissingnessSpec missingness;
};

// Prior hyperparameters (one scalar per family, as the reference analysis uses).
struct Priors {
  double psi_beta = 0.001;
  double psi_alpha = 0.001;
  double psi_phi = 0.001;
  double psi_sigma_y = 0.001;  // half-normal precision on sigma_y^2
  double psi_sigma_x = 0.001;
  double a_y = 0.001;  // inverse-gamma shape/scale on tau_y^{-1}
  double b_y = 0.001;
  double a_x = 0.001;
  double b_x = 0.001;
  double psi_lambda_y = 1.0;  // log-normal precision on lambda
  double psi_lambda_x = 1.0;

  void check() const;
};

// One full MCMC state.
struct ParameterState {
  Vector beta;
  double tau_y = 1.0;
  double sigma_y = 0.0;
  double lambda_y = 1.0;
  Vector w_y;  // length S (zeros when the response has no spatial effect)

  struct SubModelState {
    Vector alpha;
    double tau = 1.0;
    double sigma = 0.0;
    double lambda = 1.0;
    Vector w;
  };
  std::vector<SubModelState> covariates;

  std::vector<Vector> phi;  // per indicator model, length 1 + #terms
  Vector imputed;           // aligned with missing_cells(data)
};

/// Checks every ModelSpec/SpatialDataset invariant and cross-reference.
/// Each violation throws a ValidationError with a distinct `kind`.
void validate(const ModelSpec& spec, const SpatialDataset& data);

/// Deterministic neutral starting state: coefficients 0, precisions 1,
/// sigmas 0.5, lambdas 1 (unless fixed), spatial effects 0, missing cells at
/// their column's observed mean.
ParameterState init_state(const ModelSpec& spec, const SpatialDataset& data, Rng& rng);

/// Index of the sub-model whose target is `column`, or -1.
Eigen::Index submodel_for_column(const ModelSpec& spec, Eigen::Index column);

}  // namespace spamiss

#endif
