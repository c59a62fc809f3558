#pragma once

#include <cstdint>

#include "ssqp/problem.hpp"
#include "ssqp/rng.hpp"
#include "ssqp/types.hpp"

namespace ssqp {

// Stochastic gradient oracle drawing
//   g ~ Normal(grad f(x), eps_g (I + ee'))
// with e the all-ones vector. Draws are a pure function of
// (seed, sample_counter), so a run is replayable from its seed. The
// correlated factor chol(I + ee') is cached per dimension. Single-owner:
// the counters make instances stateful.
class GradientOracle {
 public:
  GradientOracle(double noise_scale, std::uint64_t seed)
      : eps_g_(noise_scale), seed_(seed) {}

  double noise_scale() const { return eps_g_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t sample_counter() const { return samples_; }

  // One draw; std_scale multiplies the noise standard deviation (used by
  // annealing schedules, variance scales by its square).
  Vector sample(const NlpProblem& problem, const Vector& x, double std_scale = 1.0);

  // Second-moment bound for Assumption-style contracts: eps_g * (n + n^2).
  double rho(int n) const { return eps_g_ * (static_cast<double>(n) + static_cast<double>(n) * n); }

  // Uniformly random unit direction from an auxiliary stream (does not
  // advance the gradient sample counter).
  Vector unit_direction(int n);

 private:
  const Matrix& correlation_factor(int n);

  double eps_g_;
  std::uint64_t seed_;
  std::uint64_t samples_ = 0;
  std::uint64_t aux_ = 0;
  int cached_n_ = -1;
  Matrix factor_;
};

Vector sample_gradient(GradientOracle& oracle, const NlpProblem& problem, const Vector& x);

}  // namespace ssqp
