#pragma once

#include <string>
#include <vector>

#include "ssqp/sqp.hpp"
#include "ssqp/trace.hpp"

namespace ssqp {

struct Violation {
  long k = 0;
  std::string invariant;
  std::string detail;
};

// Streaming per-iteration invariant suite. Feed records in run order; the
// checker keeps the previous merit/ratio parameters and a violation list
// (capped, with a total count). Covers:
//   x >= 0
//   tau monotone, decreases by at least the factor (1 - eps_tau)
//   xi monotone, factor (1 - eps_xi), and xi >= min(xi0, zeta(1-eps_xi)/2)
//   delta_l >= tau zeta ||d||^2 / 2 + sigma (||c|| - ||c + Jd||) - 1e-9
//   0 < alpha_min <= alpha_max <= min(1, alpha_phi) + 1e-12, alpha inside
//   varphi(alpha_phi) <= 1e-10 and varphi(alpha_phi + 1e-6) > 0
//   ||Jd - Jv||_inf <= 1e-8
//   ||d - d_true|| <= ||g - grad_true|| / zeta + 1e-7 (when logged)
class InvariantChecker {
 public:
  explicit InvariantChecker(const AlgoParams& params);

  void add(const IterationRecord& rec);
  long checked() const { return checked_; }
  long violation_count() const { return total_violations_; }
  const std::vector<Violation>& violations() const { return stored_; }

 private:
  void report(long k, const std::string& invariant, const std::string& detail);

  AlgoParams params_;
  double tau_prev_;
  double xi_prev_;
  long checked_ = 0;
  long total_violations_ = 0;
  std::vector<Violation> stored_;
};

// Runs the checker over a parsed trace.
std::vector<Violation> check_trace(const Trace& trace, long* checked = nullptr);

}  // namespace ssqp
