#include "spamiss/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spamiss {

namespace {

double log1pexp(double z) {
  if (z > 33.3) return z;
  if (z < -37.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

}  // namespace

double deviance(const ParameterState& state, const SpatialDataset& data, const ModelSpec& spec) {
  const auto x = complete_covariates(data, missing_cells(data), state.imputed);
  return -2.0 * response_loglik_terms(data, x, spec, state).sum();
}

ParameterState posterior_mean_state(const ChainOutput& chain) {
  if (chain.draws.empty()) throw InvalidInputError("posterior_mean_state: empty chain");
  ParameterState mean = chain.draws.front();
  const double t = static_cast<double>(chain.draws.size());
  mean.beta.setZero();
  mean.tau_y = mean.sigma_y = mean.lambda_y = 0.0;
  mean.w_y.setZero();
  for (auto& ss : mean.covariates) {
    ss.alpha.setZero();
    ss.tau = ss.sigma = ss.lambda = 0.0;
    ss.w.setZero();
  }
  for (auto& p : mean.phi) p.setZero();
  mean.imputed.setZero();
  for (const auto& d : chain.draws) {
    mean.beta += d.beta / t;
    mean.tau_y += d.tau_y / t;
    mean.sigma_y += d.sigma_y / t;
    mean.lambda_y += d.lambda_y / t;
    mean.w_y += d.w_y / t;
    for (std::size_t l = 0; l < mean.covariates.size(); ++l) {
      mean.covariates[l].alpha += d.covariates[l].alpha / t;
      mean.covariates[l].tau += d.covariates[l].tau / t;
      mean.covariates[l].sigma += d.covariates[l].sigma / t;
      mean.covariates[l].lambda += d.covariates[l].lambda / t;
      mean.covariates[l].w += d.covariates[l].w / t;
    }
    for (std::size_t m = 0; m < mean.phi.size(); ++m) mean.phi[m] += d.phi[m] / t;
    if (mean.imputed.size() > 0) mean.imputed += d.imputed / t;
  }
  return mean;
}

double mdic(const ChainOutput& chain, const SpatialDataset& data, const ModelSpec& spec) {
  if (chain.draws.empty()) throw InvalidInputError("mdic: empty chain");
  const double mean_dev = chain.deviance.mean();
  return 2.0 * mean_dev - deviance(posterior_mean_state(chain), data, spec);
}

MlpmlResult mlpml(const ChainOutput& chain) {
  const Eigen::Index t = chain.loglik_terms.rows();
  const Eigen::Index n = chain.loglik_terms.cols();
  if (t < 1 || n < 1) throw InvalidInputError("mlpml: no recorded likelihood terms");
  MlpmlResult out;
  out.mcpo.resize(n);
  const double log_t = std::log(static_cast<double>(t));
  for (Eigen::Index i = 0; i < n; ++i) {
    // log mCPO_i = log T - logsumexp_t(-loglik_ti)
    const Vector neg = -chain.loglik_terms.col(i);
    const double m = neg.maxCoeff();
    if (!std::isfinite(m))
      throw DegenerateLikelihoodError("mlpml: zero likelihood recorded for an observation");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < t; ++k) acc += std::exp(neg[k] - m);
    const double log_mcpo = log_t - (m + std::log(acc));
    out.mcpo[i] = std::exp(log_mcpo);
    out.mlpml += log_mcpo;
  }
  return out;
}

double indicator_deviance(const ParameterState& state, const SpatialDataset& data,
                          const ModelSpec& spec) {
  const auto x = complete_covariates(data, missing_cells(data), state.imputed);
  double ll = 0.0;
  for (std::size_t m = 0; m < spec.missingness.models.size(); ++m) {
    const auto& im = spec.missingness.models[m];
    const Vector& phi = state.phi[m];
    for (Eigen::Index s = 0; s < data.n_locations(); ++s) {
      const std::size_t su = static_cast<std::size_t>(s);
      for (Eigen::Index i = 0; i < data.n_obs(s); ++i) {
        double t = phi[0];
        for (std::size_t k = 0; k < im.terms.size(); ++k) {
          const auto& term = im.terms[k];
          double v = 0.0;
          switch (term.kind) {
            case IndicatorTerm::Kind::covariate:
              v = x[su](i, term.index);
              break;
            case IndicatorTerm::Kind::response:
              v = data.y[su][i];
              break;
            case IndicatorTerm::Kind::indicator:
              v = static_cast<double>(data.observed[su](i, term.index));
              break;
            case IndicatorTerm::Kind::spatial_effect:
              v = state.covariates[static_cast<std::size_t>(submodel_for_column(spec, term.index))]
                      .w[s];
              break;
          }
          t += phi[static_cast<Eigen::Index>(k) + 1] * v;
        }
        const int r = data.observed[su](i, im.target);
        ll += r == 1 ? -log1pexp(-t) : -log1pexp(t);
      }
    }
  }
  return -2.0 * ll;
}

double dic_r(const ChainOutput& chain, const SpatialDataset& data, const ModelSpec& spec) {
  if (!chain.phi_sampled || chain.draws.empty() || spec.missingness.models.empty())
    throw CriterionUnavailableError(
        "DIC(R) needs sampled missingness coefficients; refit with phi sampling enabled");
  double mean_dev = 0.0;
  for (const auto& d : chain.draws)
    mean_dev += indicator_deviance(d, data, spec) / static_cast<double>(chain.draws.size());
  return 2.0 * mean_dev - indicator_deviance(posterior_mean_state(chain), data, spec);
}

SummaryRow summary_row(const std::string& name, const Vector& draws, double level) {
  const Eigen::Index t = draws.size();
  if (t < 1) throw InvalidInputError("summary_row: empty draw series");
  SummaryRow row;
  row.parameter = name;
  row.mean = draws.mean();
  if (t > 1) {
    row.sd = std::sqrt((draws.array() - row.mean).square().sum() / static_cast<double>(t - 1));
  }
  std::vector<double> sorted(draws.data(), draws.data() + t);
  std::sort(sorted.begin(), sorted.end());
  Eigen::Index m = static_cast<Eigen::Index>(
      std::ceil(level * static_cast<double>(t) - 1e-12));
  m = std::max<Eigen::Index>(1, std::min(m, t));
  Eigen::Index best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + m - 1 < t; ++i) {
    const double width = sorted[static_cast<std::size_t>(i + m - 1)] -
                         sorted[static_cast<std::size_t>(i)];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  row.hpd_lo = sorted[static_cast<std::size_t>(best)];
  row.hpd_hi = sorted[static_cast<std::size_t>(best + m - 1)];
  return row;
}

std::vector<std::pair<std::string, Vector>> chain_series(const ChainOutput& chain,
                                                         const SpatialDataset& data,
                                                         const ModelSpec& spec) {
  if (chain.draws.empty()) throw InvalidInputError("chain_series: empty chain");
  const Eigen::Index t = static_cast<Eigen::Index>(chain.draws.size());
  std::vector<std::pair<std::string, Vector>> out;
  auto add = [&](const std::string& name, auto getter) {
    Vector v(t);
    for (Eigen::Index k = 0; k < t; ++k) v[k] = getter(chain.draws[static_cast<std::size_t>(k)]);
    out.emplace_back(name, std::move(v));
  };
  auto col_name = [&](Eigen::Index c) { return data.covariate_names[static_cast<std::size_t>(c)]; };

  const Eigen::Index nb = chain.draws.front().beta.size();
  for (Eigen::Index j = 0; j < nb; ++j)
    add("beta." + std::to_string(j), [j](const ParameterState& d) { return d.beta[j]; });
  add("tau_y", [](const ParameterState& d) { return d.tau_y; });
  if (spec.response.has_spatial_effect) {
    add("sigma_y", [](const ParameterState& d) { return d.sigma_y; });
    add("lambda_y", [](const ParameterState& d) { return d.lambda_y; });
    for (Eigen::Index s = 0; s < data.n_locations(); ++s)
      add("w_y." + std::to_string(s + 1), [s](const ParameterState& d) { return d.w_y[s]; });
  }
  for (std::size_t l = 0; l < spec.covariates.size(); ++l) {
    const std::string n = col_name(spec.covariates[l].target);
    const Eigen::Index na = chain.draws.front().covariates[l].alpha.size();
    for (Eigen::Index j = 0; j < na; ++j)
      add("alpha." + n + "." + std::to_string(j),
          [l, j](const ParameterState& d) { return d.covariates[l].alpha[j]; });
    add("tau_x." + n, [l](const ParameterState& d) { return d.covariates[l].tau; });
    if (spec.covariates[l].has_spatial_effect) {
      add("sigma_x." + n, [l](const ParameterState& d) { return d.covariates[l].sigma; });
      add("lambda_x." + n, [l](const ParameterState& d) { return d.covariates[l].lambda; });
      for (Eigen::Index s = 0; s < data.n_locations(); ++s)
        add("w_x." + n + "." + std::to_string(s + 1),
            [l, s](const ParameterState& d) { return d.covariates[l].w[s]; });
    }
  }
  if (chain.phi_sampled)
    for (std::size_t m = 0; m < spec.missingness.models.size(); ++m) {
      const std::string n = col_name(spec.missingness.models[m].target);
      const Eigen::Index np = chain.draws.front().phi[m].size();
      for (Eigen::Index j = 0; j < np; ++j)
        add("phi." + n + "." + std::to_string(j),
            [m, j](const ParameterState& d) { return d.phi[m][j]; });
    }
  for (std::size_t k = 0; k < chain.cells.size(); ++k) {
    const auto& cell = chain.cells[k];
    const std::string name = "imp." + data.locations.ids[static_cast<std::size_t>(cell.location)] +
                             "." + std::to_string(cell.row + 1) + "." + col_name(cell.column);
    add(name, [k](const ParameterState& d) { return d.imputed[static_cast<Eigen::Index>(k)]; });
  }
  return out;
}

std::vector<SummaryRow> summarize_chain(const ChainOutput& chain, const SpatialDataset& data,
                                        const ModelSpec& spec) {
  if (chain.draws.empty()) throw InvalidInputError("summarize_chain: empty chain");
  const Eigen::Index t = static_cast<Eigen::Index>(chain.draws.size());
  std::vector<SummaryRow> rows;
  auto series = [&](auto getter) {
    Vector v(t);
    for (Eigen::Index k = 0; k < t; ++k) v[k] = getter(chain.draws[static_cast<std::size_t>(k)]);
    return v;
  };
  auto col_name = [&](Eigen::Index c) { return data.covariate_names[static_cast<std::size_t>(c)]; };

  const Eigen::Index nb = chain.draws.front().beta.size();
  for (Eigen::Index j = 0; j < nb; ++j)
    rows.push_back(summary_row("beta." + std::to_string(j),
                               series([j](const ParameterState& d) { return d.beta[j]; })));
  if (spec.response.has_spatial_effect) {
    if (!spec.response.fixed_sigma)
      rows.push_back(
          summary_row("sigma_y", series([](const ParameterState& d) { return d.sigma_y; })));
    if (!spec.response.fixed_lambda)
      rows.push_back(summary_row(
          "log_lambda_y",
          series([](const ParameterState& d) { return std::log(d.lambda_y); })));
  }
  rows.push_back(summary_row("tau_y", series([](const ParameterState& d) { return d.tau_y; })));

  // Sub-model blocks in reverse conditional order, the way the reference
  // tables present them (top of the factorization first).
  for (std::size_t li = spec.covariates.size(); li-- > 0;) {
    const auto& sub = spec.covariates[li];
    const std::string n = col_name(sub.target);
    const Eigen::Index na = chain.draws.front().covariates[li].alpha.size();
    for (Eigen::Index j = 0; j < na; ++j)
      rows.push_back(summary_row(
          "alpha." + n + "." + std::to_string(j),
          series([li, j](const ParameterState& d) { return d.covariates[li].alpha[j]; })));
    if (sub.has_spatial_effect) {
      if (!sub.fixed_sigma)
        rows.push_back(summary_row(
            "sigma_x." + n,
            series([li](const ParameterState& d) { return d.covariates[li].sigma; })));
      if (!sub.fixed_lambda)
        rows.push_back(summary_row(
            "log_lambda_x." + n,
            series([li](const ParameterState& d) { return std::log(d.covariates[li].lambda); })));
    }
    rows.push_back(summary_row(
        "tau_x." + n, series([li](const ParameterState& d) { return d.covariates[li].tau; })));
  }
  if (chain.phi_sampled)
    for (std::size_t m = 0; m < spec.missingness.models.size(); ++m) {
      const std::string n = col_name(spec.missingness.models[m].target);
      const Eigen::Index np = chain.draws.front().phi[m].size();
      for (Eigen::Index j = 0; j < np; ++j)
        rows.push_back(summary_row(
            "phi." + n + "." + std::to_string(j),
            series([m, j](const ParameterState& d) { return d.phi[m][j]; })));
    }
  return rows;
}

SimMetrics sim_metrics(const std::vector<ReplicateEstimate>& estimates, double truth) {
  if (estimates.empty()) throw InvalidInputError("sim_metrics: need at least one replicate");
  const double t = static_cast<double>(estimates.size());
  SimMetrics m;
  for (const auto& e : estimates) {
    m.bias += (e.mean - truth) / t;
    m.sd += e.sd / t;
    m.mse += (e.mean - truth) * (e.mean - truth) / t;
    if (e.hpd_lo <= truth && truth <= e.hpd_hi) m.cp += 1.0 / t;
  }
  return m;
}

}  // namespace spamiss
