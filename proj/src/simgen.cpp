#include "spamiss/simgen.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace spamiss {

SimTruths SimTruths::reference() {
  SimTruths t;
  t.beta = Vector(4);
  t.beta << 1.0, 1.5, 1.0, 2.0;
  t.sigma_y = std::sqrt(2.0);
  t.sigma_x1 = 1.0;
  t.sigma_x2 = std::sqrt(1.5);
  t.lambda_y = 3.0;
  t.lambda_x1 = 5.0;
  t.lambda_x2 = 4.0;
  // Slopes keep the mechanism genuinely dependent on x3 and y; intercepts and
  // the R1 coefficient are what calibrate_phi adjusts.
  t.phi1 = Vector(3);
  t.phi1 << -0.4, 0.2, 0.05;
  t.phi2 = Vector(4);
  t.phi2 << 0.1, 0.2, -0.05, -3.8;
  t.phi1_w = Vector::Zero(2);
  t.phi2_w = Vector::Zero(2);
  return t;
}

LocationSet draw_locations(const SimDesign& design, Rng& rng) {
  Matrix coords(design.n_locations, 2);
  std::vector<std::string> ids;
  for (Eigen::Index s = 0; s < design.n_locations; ++s) {
    coords(s, 0) = design.domain * rng.uniform();
    coords(s, 1) = design.domain * rng.uniform();
    ids.push_back("L" + std::to_string(s + 1));
  }
  return LocationSet::from_coords(std::move(ids), std::move(coords));
}

namespace {

Vector draw_field(const Matrix& dist, double lambda, Rng& rng) {
  const CholFactor f = cholesky(exponential_correlation(dist, lambda));
  return f.lower * rng.normal_vector(dist.rows());
}

}  // namespace

Replicate gen_replicate_at(const LocationSet& locations, const SimDesign& design,
                           const SimTruths& truths, Rng& rng) {
  Replicate rep;
  rep.data.locations = locations;
  rep.data.covariate_names = {"x1", "x2", "x3"};
  const Eigen::Index s_count = locations.size();
  rep.w_y = draw_field(locations.dist, truths.lambda_y, rng);
  rep.w_x1 = draw_field(locations.dist, truths.lambda_x1, rng);
  rep.w_x2 = draw_field(locations.dist, truths.lambda_x2, rng);
  const double sd_y = 1.0 / std::sqrt(truths.tau_y);
  const double sd_x1 = 1.0 / std::sqrt(truths.tau_x1);
  const double sd_x2 = 1.0 / std::sqrt(truths.tau_x2);
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const Eigen::Index n = design.obs_per_location;
    Matrix x(n, 3);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x3 = rng.normal();
      const double x1 = truths.coef_x3_in_x1 * x3 + truths.sigma_x1 * rep.w_x1[s] +
                        sd_x1 * rng.normal();
      const double x2 = truths.coef_x1_in_x2 * x1 + truths.sigma_x2 * rep.w_x2[s] +
                        sd_x2 * rng.normal();
      x(i, 0) = x1;
      x(i, 1) = x2;
      x(i, 2) = x3;
      y[i] = truths.beta[0] + truths.beta[1] * x1 + truths.beta[2] * x2 + truths.beta[3] * x3 +
             truths.sigma_y * rep.w_y[s] + sd_y * rng.normal();
    }
    rep.data.x.push_back(std::move(x));
    rep.data.y.push_back(std::move(y));
    rep.data.observed.push_back(MaskMatrix::Ones(n, 3));
  }
  return rep;
}

Replicate gen_replicate(const SimDesign& design, const SimTruths& truths, Rng& rng) {
  const LocationSet locations = draw_locations(design, rng);
  return gen_replicate_at(locations, design, truths, rng);
}

std::vector<MaskMatrix> gen_missingness(const Replicate& rep, const SimTruths& truths, Rng& rng) {
  std::vector<MaskMatrix> mask;
  const auto& data = rep.data;
  auto logistic = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  for (Eigen::Index s = 0; s < data.n_locations(); ++s) {
    const std::size_t su = static_cast<std::size_t>(s);
    MaskMatrix m = MaskMatrix::Ones(data.n_obs(s), 3);
    for (Eigen::Index i = 0; i < data.n_obs(s); ++i) {
      const double x3 = data.x[su](i, 2);
      const double yv = data.y[su][i];
      double t1 = truths.phi1[0] + truths.phi1[1] * x3 + truths.phi1[2] * yv;
      if (truths.phi1_w.size() == 2)
        t1 += truths.phi1_w[0] * rep.w_x1[s] + truths.phi1_w[1] * rep.w_x2[s];
      const int r1 = rng.uniform() < logistic(t1) ? 1 : 0;
      double t2 = truths.phi2[0] + truths.phi2[1] * x3 + truths.phi2[2] * yv +
                  truths.phi2[3] * static_cast<double>(r1);
      if (truths.phi2_w.size() == 2)
        t2 += truths.phi2_w[0] * rep.w_x1[s] + truths.phi2_w[1] * rep.w_x2[s];
      const int r2 = rng.uniform() < logistic(t2) ? 1 : 0;
      m(i, 0) = r1;
      m(i, 1) = r2;
    }
    mask.push_back(std::move(m));
  }
  return mask;
}

void apply_missingness(SpatialDataset& data, const std::vector<MaskMatrix>& mask) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index s = 0; s < data.n_locations(); ++s) {
    const std::size_t su = static_cast<std::size_t>(s);
    data.observed[su] = mask[su];
    for (Eigen::Index i = 0; i < mask[su].rows(); ++i)
      for (Eigen::Index c = 0; c < mask[su].cols(); ++c)
        if (mask[su](i, c) == 0) data.x[su](i, c) = nan;
  }
}

PatternRates pattern_rates(const std::vector<MaskMatrix>& mask) {
  double n = 0.0;
  PatternRates r;
  for (const auto& m : mask)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      n += 1.0;
      const bool m1 = m(i, 0) == 0, m2 = m(i, 1) == 0;
      if (m1 && !m2) r.only_x1 += 1.0;
      if (!m1 && m2) r.only_x2 += 1.0;
      if (m1 && m2) r.both += 1.0;
    }
  r.only_x1 /= n;
  r.only_x2 /= n;
  r.both /= n;
  return r;
}

CalibrationResult calibrate_phi(const SimDesign& design, const SimTruths& truths,
                                const PatternRates& targets, Rng& rng,
                                Eigen::Index n_replicates) {
  // Common random numbers: the replicates are fixed up front and every
  // objective evaluation re-runs only the missingness draws from copies of the
  // same per-replicate streams, so the objective is deterministic.
  Rng base = rng.fork("calibration");
  std::vector<Replicate> reps;
  std::vector<Rng> mask_rngs;
  for (Eigen::Index r = 0; r < n_replicates; ++r) {
    Rng data_rng = base.fork("data." + std::to_string(r));
    reps.push_back(gen_replicate(design, truths, data_rng));
    mask_rngs.push_back(base.fork("mask." + std::to_string(r)));
  }

  SimTruths work = truths;
  auto evaluate = [&](const SimTruths& t, PatternRates* achieved) {
    PatternRates avg;
    for (Eigen::Index r = 0; r < n_replicates; ++r) {
      Rng mr = mask_rngs[static_cast<std::size_t>(r)];
      const PatternRates pr = pattern_rates(gen_missingness(reps[static_cast<std::size_t>(r)], t, mr));
      avg.only_x1 += pr.only_x1 / static_cast<double>(n_replicates);
      avg.only_x2 += pr.only_x2 / static_cast<double>(n_replicates);
      avg.both += pr.both / static_cast<double>(n_replicates);
    }
    if (achieved) *achieved = avg;
    const double d1 = avg.only_x1 - targets.only_x1;
    const double d2 = avg.only_x2 - targets.only_x2;
    const double d3 = avg.both - targets.both;
    return d1 * d1 + d2 * d2 + d3 * d3;
  };

  double* params[3] = {&work.phi1[0], &work.phi2[0], &work.phi2[3]};
  double best = evaluate(work, nullptr);
  for (int round = 0; round < 3; ++round) {
    for (double* p : params) {
      double step = round == 0 ? 1.0 : 0.25;
      for (int it = 0; it < 30 && step > 0.005; ++it) {
        bool moved = false;
        for (double direction : {+1.0, -1.0}) {
          const double saved = *p;
          *p = saved + direction * step;
          const double f = evaluate(work, nullptr);
          if (f < best) {
            best = f;
            moved = true;
            break;
          }
          *p = saved;
        }
        step = moved ? step * 1.6 : step * 0.5;
      }
    }
  }

  CalibrationResult out;
  out.phi1 = work.phi1;
  out.phi2 = work.phi2;
  evaluate(work, &out.achieved);
  const double worst = std::max({std::abs(out.achieved.only_x1 - targets.only_x1),
                                 std::abs(out.achieved.only_x2 - targets.only_x2),
                                 std::abs(out.achieved.both - targets.both)});
  if (worst > 0.05) {
    std::ostringstream msg;
    msg << "calibration could not reach the target rates; best found ("
        << out.achieved.only_x1 << ", " << out.achieved.only_x2 << ", " << out.achieved.both
        << ")";
    throw CalibrationError(msg.str());
  }
  return out;
}

}  // namespace spamiss
