#ifndef SPAMISS_SIMGEN_HPP
#define SPAMISS_SIMGEN_HPP

#include "spamiss/model.hpp"

namespace spamiss {

// Generating values for the reference simulation design: three covariates, the
// first two missing-prone, exponential-kernel spatial effects on the response
// and both missing-prone covariates.
struct SimTruths {
  Vector beta;  // response intercept and slopes on (x1, x2, x3)
  double tau_y = 1.0, tau_x1 = 1.0, tau_x2 = 1.0;
  double sigma_y = 1.0, sigma_x1 = 1.0, sigma_x2 = 1.0;
  double lambda_y = 1.0, lambda_x1 = 1.0, lambda_x2 = 1.0;
  double coef_x3_in_x1 = 1.0;  // x1 mean = coef * x3 + sigma_x1 * W_x1
  double coef_x1_in_x2 = 2.0;  // x2 mean = coef * x1 + sigma_x2 * W_x2
  Vector phi1;                 // logit P(R1 = 1): intercept, x3, y
  Vector phi2;                 // logit P(R2 = 1): intercept, x3, y, R1
  // Optional latent-field terms (W_x1(s), W_x2(s)) in each logit; zeros keep
  // the mechanism MAR, nonzero makes it non-ignorable.
  Vector phi1_w, phi2_w;

  static SimTruths reference();  // the values the simulation study reports
};

struct SimDesign {
  Eigen::Index n_locations = 20;
  double domain = 20.0;  // locations uniform on [0, domain]^2
  Eigen::Index obs_per_location = 50;
  bool redraw_locations = true;  // false: one location draw shared by replicates
};

struct Replicate {
  SpatialDataset data;  // fully observed; masking is a separate step
  Vector w_y, w_x1, w_x2;
};

LocationSet draw_locations(const SimDesign& design, Rng& rng);

/// One fully observed replicate at freshly drawn locations.
Replicate gen_replicate(const SimDesign& design, const SimTruths& truths, Rng& rng);
/// Same, at caller-supplied locations (for fixed-location designs).
Replicate gen_replicate_at(const LocationSet& locations, const SimDesign& design,
                           const SimTruths& truths, Rng& rng);

/// Sequential logistic missingness draws for (x1, x2). Consumes exactly two
/// uniforms per observation, in (location, row) order, and never reads x1/x2,
/// so the mask is invariant to their values.
std::vector<MaskMatrix> gen_missingness(const Replicate& rep, const SimTruths& truths, Rng& rng);

/// Writes the mask into the dataset and NaNs the masked cells.
void apply_missingness(SpatialDataset& data, const std::vector<MaskMatrix>& mask);

struct PatternRates {
  double only_x1 = 0.0;  // x1 missing, x2 observed
  double only_x2 = 0.0;
  double both = 0.0;
};

PatternRates pattern_rates(const std::vector<MaskMatrix>& mask);

struct CalibrationResult {
  Vector phi1, phi2;
  PatternRates achieved;
};

/// Coordinate search over (phi1[0], phi2[0], phi2[3]) minimizing the squared
/// deviation of Monte Carlo pattern rates from the targets; slope terms stay
/// at their values in `truths`. Deterministic given the rng (common random
/// numbers across evaluations). Throws CalibrationError when the best found
/// rates are further than 5 points from any target.
CalibrationResult calibrate_phi(const SimDesign& design, const SimTruths& truths,
                                const PatternRates& targets, Rng& rng,
                                Eigen::Index n_replicates = 40);

}  // namespace spamiss

#endif
