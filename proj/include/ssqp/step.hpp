#pragma once

#include <vector>

#include "ssqp/qp.hpp"
#include "ssqp/types.hpp"

namespace ssqp {

// Normal direction v = u + J'w from
//   min 1/2 ||c + JJ'w||^2 + mu/2 ||u||^2
//   s.t. J u = 0,  x + u + J'w >= 0
// where u lies in the Jacobian null space and J'w in its row space.
struct NormalStep {
  Vector u;
  Vector w;
  Vector v;
  double lin_feas_gain = 0;  // ||c||_2 - ||c + Jv||_2, nonnegative up to roundoff
  bool rank_deficient = false;
  std::vector<int> active_set;  // bound rows of the lifted program, for warm starts
};

NormalStep normal_step(const Vector& x, const Vector& c, const Matrix& jac, double mu,
                       double qp_tol = 1e-9, const std::vector<int>* warm = nullptr);

// Termination test for points that are stationary for the constraint
// violation measure but not feasible: ||c||_inf > feas_tol while the normal
// direction is (numerically) zero.
bool is_infeasible_stationary(const Vector& c, const Vector& v, double feas_tol = 1e-8,
                              double step_tol = 1e-9);

// Search direction from
//   min g'd + 1/2 d'Hd  s.t.  J d = J v,  x + d >= 0
// with multipliers (y for the equalities, z >= 0 for the bounds).
struct TangentialStep {
  Vector d;
  Vector y;
  Vector z;
  double quad_value = 0;  // g'd + 1/2 d'Hd
  std::vector<int> active_set;
};

TangentialStep tangential_step(const Vector& x, const Vector& g, const Matrix& H,
                               const Matrix& jac, const Vector& v, double qp_tol = 1e-9,
                               const std::vector<int>* warm = nullptr);

// Merit-model reduction -tau g'd + ||c||_2 - ||c + Jd||_2.
double model_reduction(double tau, const Vector& g, const Vector& d, const Vector& c,
                       const Matrix& jac);

}  // namespace ssqp
