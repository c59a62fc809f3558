#include "ssqp/step.hpp"

#include <cmath>
#include <sstream>

namespace ssqp {

namespace {

void throw_step_error(const char* what, const QpSolution& sol) {
  std::ostringstream os;
  os << what << ": subproblem solve ended with status " << to_string(sol.status)
     << " (kkt residual " << sol.kkt_residual << ")";
  throw StepError(os.str());
}

}  // namespace

NormalStep normal_step(const Vector& x, const Vector& c, const Matrix& jac, double mu,
                       double qp_tol, const std::vector<int>* warm) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(c.size());
  if (jac.rows() != m || jac.cols() != n) throw StepError("normal_step: jacobian dimension mismatch");
  if (!(mu > 0)) throw StepError("normal_step: mu must be positive");

  NormalStep out;
  if (m == 0) {
    out.u = Vector::Zero(n);
    out.w = Vector(0);
    out.v = Vector::Zero(n);
    out.lin_feas_gain = 0.0;
    return out;
  }

  Eigen::JacobiSVD<Matrix> svd(jac);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  out.rank_deficient = smin <= 1e-10 * std::max(1.0, smax);

  // lift over (u, w): quadratic blocks mu*I and (JJ')^2, small diagonal
  // regularization keeps the solver's SPD path usable for ill-conditioned J
  const Matrix gram = jac * jac.transpose();
  ConvexQp qp;
  qp.Q = Matrix::Zero(n + m, n + m);
  qp.Q.topLeftCorner(n, n) = mu * Matrix::Identity(n, n);
  qp.Q.bottomRightCorner(m, m) = gram * gram;
  qp.Q += 1e-12 * Matrix::Identity(n + m, n + m);
  qp.q = Vector::Zero(n + m);
  qp.q.tail(m) = gram * c;
  qp.A_eq = Matrix::Zero(m, n + m);
  qp.A_eq.leftCols(n) = jac;
  qp.b_eq = Vector::Zero(m);
  qp.A_in = Matrix::Zero(n, n + m);
  qp.A_in.leftCols(n) = Matrix::Identity(n, n);
  qp.A_in.rightCols(m) = jac.transpose();
  qp.b_in = -x;

  QpWarmStart ws;
  ws.z = Vector::Zero(n + m);  // (0,0) is always feasible from x >= 0
  if (warm) ws.active_set = *warm;
  QpSolution sol = solve_qp(qp, qp_tol, -1, &ws);
  if (sol.status != QpStatus::Optimal) throw_step_error("normal_step", sol);

  out.u = sol.z.head(n);
  out.w = sol.z.tail(m);
  out.v = out.u + jac.transpose() * out.w;
  out.lin_feas_gain = c.norm() - (c + jac * out.v).norm();
  out.active_set = sol.active_set;
  return out;
}

bool is_infeasible_stationary(const Vector& c, const Vector& v, double feas_tol, double step_tol) {
  const double cn = inf_norm(c);
  if (cn <= feas_tol) return false;
  return inf_norm(v) <= step_tol * std::max(1.0, cn);
}

TangentialStep tangential_step(const Vector& x, const Vector& g, const Matrix& H,
                               const Matrix& jac, const Vector& v, double qp_tol,
                               const std::vector<int>* warm) {
  const int n = static_cast<int>(x.size());
  if (g.size() != n || H.rows() != n || H.cols() != n || jac.cols() != n || v.size() != n)
    throw StepError("tangential_step: dimension mismatch");

  ConvexQp qp;
  qp.Q = H;
  qp.q = g;
  qp.A_eq = jac;
  qp.b_eq = jac * v;
  qp.A_in = Matrix::Identity(n, n);
  qp.b_in = -x;

  QpWarmStart ws;
  ws.z = v;  // v is feasible for its own linearized-gain constraint
  if (warm) ws.active_set = *warm;
  QpSolution sol = solve_qp(qp, qp_tol, -1, &ws);
  if (sol.status != QpStatus::Optimal) throw_step_error("tangential_step", sol);

  TangentialStep out;
  out.d = sol.z;
  out.y = sol.y_eq;
  out.z = sol.z_in;
  out.quad_value = g.dot(out.d) + 0.5 * out.d.dot(H * out.d);
  out.active_set = sol.active_set;
  return out;
}

double model_reduction(double tau, const Vector& g, const Vector& d, const Vector& c,
                       const Matrix& jac) {
  const double linearized = c.size() > 0 ? (c + jac * d).norm() : 0.0;
  const double cn = c.size() > 0 ? c.norm() : 0.0;
  return -tau * g.dot(d) + cn - linearized;
}

}  // namespace ssqp
