#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssqp/types.hpp"

namespace ssqp {

// Strictly convex quadratic program in standard form:
//   min  1/2 z'Qz + q'z
//   s.t. A_eq z  = b_eq
//        A_in z >= b_in
struct ConvexQp {
  Matrix Q;     // p x p, symmetric positive definite
  Vector q;     // p
  Matrix A_eq;  // r x p
  Vector b_eq;  // r
  Matrix A_in;  // s x p
  Vector b_in;  // s

  int p() const { return static_cast<int>(Q.rows()); }
  int r() const { return static_cast<int>(A_eq.rows()); }
  int s() const { return static_cast<int>(A_in.rows()); }

  // Symmetry within 1e-12 and smallest eigenvalue >= spd_floor.
  bool validate(double spd_floor, std::string* why = nullptr) const;
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

const char* to_string(QpStatus s);

struct QpSolution {
  Vector z;                     // primal
  Vector y_eq;                  // equality multipliers
  Vector z_in;                  // inequality multipliers, >= 0 at optimality
  std::vector<int> active_set;  // inequality rows held at equality (sorted)
  QpStatus status = QpStatus::IterationLimit;
  double kkt_residual = kInf;
  int iterations = 0;  // working-set iterations
  int exchanges = 0;   // constraint additions + drops
};

// Warm start: a feasible primal point plus a working-set guess.
struct QpWarmStart {
  Vector z;
  std::vector<int> active_set;
};

struct KktResiduals {
  double stationarity = 0;    // ||Qz + q + A_eq'y - A_in'z_in||_inf
  double primal = 0;          // max equality and inequality violation
  double dual = 0;            // max(-z_in, 0)
  double complementarity = 0; // ||z_in .* (A_in z - b_in)||_inf
  double max() const;
  bool pass(double tol) const { return max() <= tol; }
};

// Primal active-set method with a null-space EQP solve per working set.
// max_iter < 0 selects the default 50*(p+s).
QpSolution solve_qp(const ConvexQp& qp, double tol = 1e-9, int max_iter = -1,
                    const QpWarmStart* warm = nullptr);

// Independent oracle: enumerates all 2^s subsets of inequality rows held at
// equality, solves each KKT system by dense LU, and keeps the best candidate
// that is primal and dual feasible. Requires s <= 12.
QpSolution brute_force_qp(const ConvexQp& qp);

KktResiduals verify_kkt(const ConvexQp& qp, const QpSolution& sol);

}  // namespace ssqp
