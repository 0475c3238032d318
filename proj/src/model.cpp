#include "spamiss/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

namespace spamiss {

Eigen::Index SpatialDataset::total_n() const {
  Eigen::Index n = 0;
  for (const auto& ys : y) n += ys.size();
  return n;
}

Eigen::Index SpatialDataset::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < covariate_names.size(); ++j)
    if (covariate_names[j] == name) return static_cast<Eigen::Index>(j);
  return -1;
}

std::vector<MissingCell> missing_cells(const SpatialDataset& data) {
  std::vector<MissingCell> cells;
  for (Eigen::Index s = 0; s < data.n_locations(); ++s) {
    const auto& mask = data.observed[static_cast<std::size_t>(s)];
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        if (mask(i, c) == 0) cells.push_back({s, i, c});
  }
  return cells;
}

std::vector<Matrix> complete_covariates(const SpatialDataset& data,
                                        const std::vector<MissingCell>& cells,
                                        const Vector& imputed) {
  if (static_cast<Eigen::Index>(cells.size()) != imputed.size())
    throw InvalidInputError("complete_covariates: imputation slots do not cover masked cells");
  std::vector<Matrix> x = data.x;
  for (std::size_t k = 0; k < cells.size(); ++k)
    x[static_cast<std::size_t>(cells[k].location)](cells[k].row, cells[k].column) = imputed[k];
  for (const auto& xs : x)
    if (!xs.allFinite())
      throw InvalidStateError("complete_covariates: unimputed sentinel reached likelihood input");
  return x;
}

SpatialDataset complete_cases(const SpatialDataset& data) {
  SpatialDataset out;
  out.locations = data.locations;
  out.covariate_names = data.covariate_names;
  const Eigen::Index p = data.n_covariates();
  for (Eigen::Index s = 0; s < data.n_locations(); ++s) {
    const std::size_t su = static_cast<std::size_t>(s);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < data.n_obs(s); ++i)
      if (data.observed[su].row(i).minCoeff() == 1) keep.push_back(i);
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    Vector ys(m);
    Matrix xs(m, p);
    for (Eigen::Index k = 0; k < m; ++k) {
      ys[k] = data.y[su][keep[static_cast<std::size_t>(k)]];
      xs.row(k) = data.x[su].row(keep[static_cast<std::size_t>(k)]);
    }
    out.y.push_back(std::move(ys));
    out.x.push_back(std::move(xs));
    out.observed.push_back(MaskMatrix::Ones(m, p));
  }
  return out;
}

Eigen::Index submodel_for_column(const ModelSpec& spec, Eigen::Index column) {
  for (std::size_t l = 0; l < spec.covariates.size(); ++l)
    if (spec.covariates[l].target == column) return static_cast<Eigen::Index>(l);
  return -1;
}

void Priors::check() const {
  const double vals[] = {psi_beta, psi_alpha, psi_phi,      psi_sigma_y,  psi_sigma_x, a_y,
                         b_y,      a_x,       b_x,          psi_lambda_y, psi_lambda_x};
  for (double v : vals)
    if (!(v > 0.0)) throw ValidationError("prior-hyperparameter", "all hyperparameters must be > 0");
}

namespace {

void check_family(const CorrelationFamily& fam, Eigen::Index s, const char* where) {
  if (fam.kind == CorrelationKind::car && (fam.adjacency.rows() != s || fam.adjacency.cols() != s))
    throw ValidationError("car-adjacency-shape",
                          std::string(where) + ": adjacency does not match the location count");
}

void check_predictors(const std::vector<Eigen::Index>& preds, Eigen::Index p, const char* where) {
  std::set<Eigen::Index> seen;
  for (Eigen::Index c : preds) {
    if (c < 0 || c >= p)
      throw ValidationError("predictor-out-of-range",
                            std::string(where) + ": predictor column out of range");
    if (!seen.insert(c).second)
      throw ValidationError("duplicate-predictor", std::string(where) + ": repeated predictor");
  }
}

}  // namespace

void validate(const ModelSpec& spec, const SpatialDataset& data) {
  const Eigen::Index s_count = data.n_locations();
  const Eigen::Index p = data.n_covariates();
  if (s_count < 1 || p < 1 || data.total_n() < 1)
    throw ValidationError("empty-dataset", "need at least one location, covariate and observation");
  if (data.y.size() != static_cast<std::size_t>(s_count) ||
      data.x.size() != static_cast<std::size_t>(s_count) ||
      data.observed.size() != static_cast<std::size_t>(s_count))
    throw ValidationError("bad-dimensions", "per-location containers disagree with location count");
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const std::size_t su = static_cast<std::size_t>(s);
    const Eigen::Index ns = data.y[su].size();
    if (data.x[su].rows() != ns || data.x[su].cols() != p ||
        data.observed[su].rows() != ns || data.observed[su].cols() != p)
      throw ValidationError("bad-dimensions", "mask or covariate dimensions do not match");
    for (Eigen::Index i = 0; i < ns; ++i)
      for (Eigen::Index c = 0; c < p; ++c) {
        const int r = data.observed[su](i, c);
        if (r != 0 && r != 1) throw ValidationError("mask-value", "mask entries must be 0 or 1");
        if (r == 1 && !std::isfinite(data.x[su](i, c)))
          throw ValidationError("unmasked-nan", "non-finite covariate marked observed");
      }
    if (!data.y[su].allFinite())
      throw ValidationError("unmasked-nan", "response must be fully observed");
  }

  check_predictors(spec.response.predictors, p, "response");
  check_family(spec.response.correlation, s_count, "response");
  if (!spec.response.has_spatial_effect &&
      (spec.response.fixed_sigma || spec.response.fixed_lambda))
    throw ValidationError("fixed-flag-inconsistent",
                          "response fixes sigma/lambda but has no spatial effect");

  // The sub-model list order is the conditional order; targets must be the
  // first q columns so that the remaining columns are the fully observed ones.
  const Eigen::Index q = static_cast<Eigen::Index>(spec.covariates.size());
  std::set<Eigen::Index> targets;
  for (const auto& sub : spec.covariates) {
    if (sub.target < 0 || sub.target >= p)
      throw ValidationError("predictor-out-of-range", "sub-model target column out of range");
    if (!targets.insert(sub.target).second)
      throw ValidationError("duplicate-submodel", "two sub-models share a target");
    check_family(sub.correlation, s_count, "sub-model");
    if (!sub.has_spatial_effect && (sub.fixed_sigma || sub.fixed_lambda))
      throw ValidationError("fixed-flag-inconsistent",
                            "sub-model fixes sigma/lambda but has no spatial effect");
  }
  for (Eigen::Index c = 0; c < p; ++c) {
    bool has_missing = false;
    for (Eigen::Index s = 0; s < s_count && !has_missing; ++s)
      has_missing = data.observed[static_cast<std::size_t>(s)].col(c).minCoeff() == 0;
    if (has_missing && targets.count(c) == 0)
      throw ValidationError("missing-submodel", "column " + data.covariate_names[static_cast<std::size_t>(c)] +
                                                    " has missing entries but no sub-model");
  }
  for (Eigen::Index t : targets)
    if (t >= q)
      throw ValidationError("submodel-ordering",
                            "missing-prone covariates must be the leading columns");
  // With the prefix established, any predictor column < q is a sub-model target
  // and must appear earlier in the conditional order.
  std::set<Eigen::Index> earlier;
  for (const auto& sub : spec.covariates) {
    check_predictors(sub.predictors, p, "sub-model");
    for (Eigen::Index c : sub.predictors) {
      if (c == sub.target)
        throw ValidationError("cycle", "sub-model uses its own target as predictor");
      if (c < q && earlier.count(c) == 0)
        throw ValidationError("forward-reference",
                              "sub-model conditions on a later target in the conditional order");
    }
    earlier.insert(sub.target);
  }

  const auto& miss = spec.missingness;
  const bool mnar = miss.mechanism == Mechanism::mnar;
  if (mnar && miss.models.empty() && !missing_cells(data).empty())
    throw ValidationError("mnar-without-indicators",
                          "MNAR mechanism requires indicator models");
  std::set<Eigen::Index> indicator_targets;
  std::set<Eigen::Index> indicator_earlier;
  for (const auto& im : miss.models) {
    if (targets.count(im.target) == 0)
      throw ValidationError("indicator-target", "indicator target has no covariate sub-model");
    if (!indicator_targets.insert(im.target).second)
      throw ValidationError("duplicate-indicator", "two indicator models share a target");
    for (const auto& term : im.terms) {
      switch (term.kind) {
        case IndicatorTerm::Kind::covariate:
          if (term.index < 0 || term.index >= p)
            throw ValidationError("predictor-out-of-range", "indicator covariate out of range");
          if (!mnar && targets.count(term.index) != 0)
            throw ValidationError("mar-violation",
                                  "MAR indicator model conditions on a missing-prone covariate");
          break;
        case IndicatorTerm::Kind::response:
          break;
        case IndicatorTerm::Kind::indicator:
          if (term.index == im.target || indicator_earlier.count(term.index) == 0)
            throw ValidationError("indicator-forward-reference",
                                  "indicator conditions on a non-earlier indicator");
          break;
        case IndicatorTerm::Kind::spatial_effect: {
          if (!mnar)
            throw ValidationError("mar-violation",
                                  "MAR indicator model conditions on a spatial effect");
          const Eigen::Index l = submodel_for_column(spec, term.index);
          if (l < 0 || !spec.covariates[static_cast<std::size_t>(l)].has_spatial_effect)
            throw ValidationError("spatial-ref-unavailable",
                                  "indicator references a spatial effect that does not exist");
          break;
        }
      }
    }
    indicator_earlier.insert(im.target);
  }
}

namespace {

double car_max_eigenvalue(const Matrix& adjacency) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(adjacency, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double initial_lambda(const CorrelationFamily& fam, const std::optional<double>& fixed) {
  if (fixed) return *fixed;
  if (fam.kind == CorrelationKind::car) {
    const double e_max = car_max_eigenvalue(fam.adjacency);
    if (e_max > 0.0 && 1.0 >= 1.0 / e_max) return 0.5 / e_max;
  }
  return 1.0;
}

}  // namespace

ParameterState init_state(const ModelSpec& spec, const SpatialDataset& data, Rng& /*rng*/) {
  const Eigen::Index s_count = data.n_locations();
  ParameterState st;
  st.beta = Vector::Zero(1 + static_cast<Eigen::Index>(spec.response.predictors.size()));
  st.tau_y = 1.0;
  st.sigma_y = spec.response.has_spatial_effect ? spec.response.fixed_sigma.value_or(0.5) : 0.0;
  st.lambda_y = spec.response.has_spatial_effect
                    ? initial_lambda(spec.response.correlation, spec.response.fixed_lambda)
                    : 1.0;
  st.w_y = Vector::Zero(s_count);

  for (const auto& sub : spec.covariates) {
    ParameterState::SubModelState ss;
    ss.alpha = Vector::Zero(1 + static_cast<Eigen::Index>(sub.predictors.size()));
    ss.tau = 1.0;
    ss.sigma = sub.has_spatial_effect ? sub.fixed_sigma.value_or(0.5) : 0.0;
    ss.lambda = sub.has_spatial_effect ? initial_lambda(sub.correlation, sub.fixed_lambda) : 1.0;
    ss.w = Vector::Zero(s_count);
    st.covariates.push_back(std::move(ss));
  }

  for (const auto& im : spec.missingness.models)
    st.phi.push_back(Vector::Zero(1 + static_cast<Eigen::Index>(im.terms.size())));

  const auto cells = missing_cells(data);
  const Eigen::Index p = data.n_covariates();
  Vector col_sum = Vector::Zero(p);
  Vector col_count = Vector::Zero(p);
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const std::size_t su = static_cast<std::size_t>(s);
    for (Eigen::Index i = 0; i < data.n_obs(s); ++i)
      for (Eigen::Index c = 0; c < p; ++c)
        if (data.observed[su](i, c) == 1) {
          col_sum[c] += data.x[su](i, c);
          col_count[c] += 1.0;
        }
  }
  st.imputed.resize(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Eigen::Index c = cells[k].column;
    if (col_count[c] == 0.0)
      throw CannotInitializeError("column " + data.covariate_names[static_cast<std::size_t>(c)] +
                                  " has no observed entries to initialize from");
    st.imputed[static_cast<Eigen::Index>(k)] = col_sum[c] / col_count[c];
  }
  return st;
}

}  // namespace spamiss
