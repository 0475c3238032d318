#ifndef SPAMISS_RNG_HPP
#define SPAMISS_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace spamiss {

// Seeded random stream with deterministic forking. Forked streams depend only
// on (root seed, tag), never on how much the parent has consumed, so distinct
// sampler blocks and replicates get independent, reproducible streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng fork(std::string_view tag) const;
  Rng fork(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1).
  double uniform();
  // Standard normal (Box-Muller; two uniforms per draw, no cached spare).
  double normal();
  // Gamma(shape, rate), shape > 0, rate > 0 (Marsaglia-Tsang).
  double gamma(double shape, double rate);
  bool bernoulli(double p);

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace spamiss

#endif
