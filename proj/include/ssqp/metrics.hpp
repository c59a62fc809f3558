#pragma once

#include <vector>

#include "ssqp/problem.hpp"
#include "ssqp/sqp.hpp"
#include "ssqp/types.hpp"

namespace ssqp {

struct ErrorReport {
  double feas_err = 0;
  double kkt_err = 0;
  double stationarity = 0;
  long k_best = 0;
};

// Infinity-norm constraint violation; bound violations are excluded because
// iterates satisfy x >= 0 by construction.
double feas_err(const Vector& c);

// Infinity norm over the stacked first-order conditions:
// grad_f + J'y - z, c, min(x,0), min(z,0), x .* z.
double kkt_err(const Vector& x, const Vector& grad_f, const Matrix& jac, const Vector& y,
               const Vector& z, const Vector& c = Vector(0));

struct TrueDirection {
  Vector d;
  Vector y;
  Vector z;
};

// Search-direction subproblem solved with the exact gradient.
TrueDirection true_direction(const Vector& x, const NlpProblem& problem, const Matrix& H,
                             const Matrix& jac, const Vector& v, double qp_tol = 1e-9);

// 1/2 tau zeta ||d_true||^2 + sigma (||c||_2 - ||c + J d_true||_2).
double stationarity_measure(double tau, double zeta, double sigma, const Vector& d_true,
                            const Vector& c, const Matrix& jac);

// Streaming best-iterate selection: prefer the smallest true-multiplier KKT
// error among sufficiently feasible iterates, otherwise the smallest
// feasibility error; ties keep the earliest index.
class BestIterateTracker {
 public:
  explicit BestIterateTracker(double feas_threshold = 1e-4) : threshold_(feas_threshold) {}
  void add(long k, double feas, double kkt);
  bool empty() const { return count_ == 0; }
  long index() const;
  double feas() const;
  double kkt() const;

 private:
  double threshold_;
  long count_ = 0;
  long best_feas_k_ = -1;
  double best_feas_ = kInf;
  double best_feas_kkt_ = kInf;
  long best_kkt_k_ = -1;
  double best_kkt_ = kInf;
  double best_kkt_feas_ = kInf;
};

// Index (into the trajectory) of the best iterate; requires the records to
// carry true-gradient multipliers.
std::size_t best_iterate(const std::vector<IterationRecord>& trajectory,
                         double feas_threshold = 1e-4);

}  // namespace ssqp
