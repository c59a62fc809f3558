#include "ssqp/problem.hpp"

#include <cmath>
#include <sstream>

namespace ssqp {

EvalPoint eval_point(const NlpProblem& problem, const Vector& x) {
  if (x.size() != problem.n) throw EvaluationError("eval_point: x has wrong dimension for " + problem.name);
  if (!x.allFinite()) throw EvaluationError("eval_point: x contains a non-finite entry");
  EvalPoint out;
  out.f = problem.objective(x);
  if (!std::isfinite(out.f)) throw EvaluationError("eval_point: objective non-finite at " + problem.name);
  out.c = problem.m > 0 ? problem.constraints(x) : Vector(0);
  if (out.c.size() != problem.m) throw EvaluationError("eval_point: constraint dimension mismatch at " + problem.name);
  if (!out.c.allFinite()) throw EvaluationError("eval_point: constraints non-finite at " + problem.name);
  out.jac = problem.m > 0 ? problem.jacobian(x) : Matrix::Zero(0, problem.n);
  if (out.jac.rows() != problem.m || out.jac.cols() != problem.n)
    throw EvaluationError("eval_point: jacobian dimension mismatch at " + problem.name);
  if (!out.jac.allFinite()) throw EvaluationError("eval_point: jacobian non-finite at " + problem.name);
  return out;
}

bool BoundsSpec::valid() const {
  if (lower.size() != upper.size()) return false;
  for (int i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower(i)) || std::isnan(upper(i))) return false;
    if (lower(i) > upper(i)) return false;
    if (lower(i) == kInf || upper(i) == -kInf) return false;
  }
  return true;
}

namespace {

enum class BoundKind { Shift, Reflect, Box, Split };

struct CoordMap {
  BoundKind kind;
  int col = -1;    // primary new column
  int col2 = -1;   // slack (Box) or negative part (Split)
  double offset = 0;
};

}  // namespace

NlpProblem to_nonnegative_form(const NlpProblem& problem, const BoundsSpec& bounds) {
  if (!bounds.valid() || bounds.lower.size() != problem.n)
    throw ConfigError("to_nonnegative_form: invalid bounds for " + problem.name);

  const int n = problem.n;
  std::vector<CoordMap> maps(n);
  int cols = 0;
  int box_rows = 0;
  bool pure_shift = true;
  for (int j = 0; j < n; ++j) {
    const double l = bounds.lower(j);
    const double u = bounds.upper(j);
    CoordMap& cm = maps[j];
    if (std::isfinite(l) && std::isfinite(u)) {
      cm = {BoundKind::Box, cols++, -1, l};
      ++box_rows;
      pure_shift = false;
    } else if (std::isfinite(l)) {
      cm = {BoundKind::Shift, cols++, -1, l};
    } else if (std::isfinite(u)) {
      cm = {BoundKind::Reflect, cols++, -1, u};
      pure_shift = false;
    } else {
      cm = {BoundKind::Split, cols++, -1, 0.0};
      pure_shift = false;
    }
  }
  // secondary columns after all primaries, in coordinate order
  for (int j = 0; j < n; ++j) {
    if (maps[j].kind == BoundKind::Box || maps[j].kind == BoundKind::Split) maps[j].col2 = cols++;
  }

  const int n_new = cols;
  const int m_new = problem.m + box_rows;

  // x = T x' + t0
  Matrix T = Matrix::Zero(n, n_new);
  Vector t0 = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    const CoordMap& cm = maps[j];
    switch (cm.kind) {
      case BoundKind::Shift:
      case BoundKind::Box:
        T(j, cm.col) = 1.0;
        t0(j) = cm.offset;
        break;
      case BoundKind::Reflect:
        T(j, cm.col) = -1.0;
        t0(j) = cm.offset;
        break;
      case BoundKind::Split:
        T(j, cm.col) = 1.0;
        T(j, cm.col2) = -1.0;
        break;
    }
  }

  Matrix box_jac = Matrix::Zero(box_rows, n_new);
  Vector box_rhs = Vector::Zero(box_rows);
  {
    int row = 0;
    for (int j = 0; j < n; ++j) {
      if (maps[j].kind != BoundKind::Box) continue;
      box_jac(row, maps[j].col) = 1.0;
      box_jac(row, maps[j].col2) = 1.0;
      box_rhs(row) = bounds.upper(j) - bounds.lower(j);
      ++row;
    }
  }

  NlpProblem out;
  out.n = n_new;
  out.m = m_new;
  out.name = problem.name + "_nonneg";
  const int m_old = problem.m;
  auto fwd = [T, t0](const Vector& xp) -> Vector { return T * xp + t0; };
  out.objective = [problem, fwd](const Vector& xp) { return problem.objective(fwd(xp)); };
  out.gradient = [problem, fwd, T](const Vector& xp) -> Vector { return T.transpose() * problem.gradient(fwd(xp)); };
  out.constraints = [problem, fwd, box_jac, box_rhs, m_old, m_new](const Vector& xp) -> Vector {
    Vector c(m_new);
    if (m_old > 0) c.head(m_old) = problem.constraints(fwd(xp));
    if (box_jac.rows() > 0) c.tail(box_jac.rows()) = box_jac * xp - box_rhs;
    return c;
  };
  out.jacobian = [problem, fwd, T, box_jac, m_old, m_new, n_new](const Vector& xp) -> Matrix {
    Matrix J = Matrix::Zero(m_new, n_new);
    if (m_old > 0) J.topRows(m_old) = problem.jacobian(fwd(xp)) * T;
    if (box_jac.rows() > 0) J.bottomRows(box_jac.rows()) = box_jac;
    return J;
  };

  if (problem.start.size() == n) {
    Vector x0 = problem.start.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
    Vector s0 = Vector::Zero(n_new);
    for (int j = 0; j < n; ++j) {
      const CoordMap& cm = maps[j];
      switch (cm.kind) {
        case BoundKind::Shift:
          s0(cm.col) = x0(j) - cm.offset;
          break;
        case BoundKind::Reflect:
          s0(cm.col) = cm.offset - x0(j);
          break;
        case BoundKind::Box:
          s0(cm.col) = x0(j) - cm.offset;
          s0(cm.col2) = bounds.upper(j) - x0(j);
          break;
        case BoundKind::Split:
          s0(cm.col) = std::max(x0(j), 0.0);
          s0(cm.col2) = std::max(-x0(j), 0.0);
          break;
      }
    }
    out.start = s0;
  }
  if (pure_shift && problem.known_solution) {
    KnownSolution ks = *problem.known_solution;
    ks.x = ks.x - bounds.lower;
    out.known_solution = ks;
  }
  out.regular = problem.regular && pure_shift;
  out.lipschitz_gradient = problem.lipschitz_gradient;
  out.lipschitz_jacobian = problem.lipschitz_jacobian;
  return out;
}

NlpProblem add_slacks(const InequalityProblem& ip) {
  NlpProblem out;
  out.name = ip.name;
  if (ip.m_in == 0) {
    out.n = ip.n;
    out.m = ip.m_eq;
    out.objective = ip.objective;
    out.gradient = ip.gradient;
    if (ip.m_eq > 0) {
      out.constraints = ip.eq_constraints;
      out.jacobian = ip.eq_jacobian;
    } else {
      const int n = ip.n;
      out.constraints = [](const Vector&) { return Vector(0); };
      out.jacobian = [n](const Vector&) { return Matrix::Zero(0, n); };
    }
    out.start = ip.start;
    return out;
  }

  const int n = ip.n;
  const int m_eq = ip.m_eq;
  const int m_in = ip.m_in;
  out.n = n + m_in;
  out.m = m_eq + m_in;
  out.objective = [ip, n](const Vector& xs) { return ip.objective(xs.head(n)); };
  out.gradient = [ip, n, m_in](const Vector& xs) -> Vector {
    Vector g = Vector::Zero(n + m_in);
    g.head(n) = ip.gradient(xs.head(n));
    return g;
  };
  out.constraints = [ip, n, m_eq, m_in](const Vector& xs) -> Vector {
    Vector c(m_eq + m_in);
    if (m_eq > 0) c.head(m_eq) = ip.eq_constraints(xs.head(n));
    c.tail(m_in) = ip.in_constraints(xs.head(n)) + xs.tail(m_in);
    return c;
  };
  out.jacobian = [ip, n, m_eq, m_in](const Vector& xs) -> Matrix {
    Matrix J = Matrix::Zero(m_eq + m_in, n + m_in);
    if (m_eq > 0) J.topLeftCorner(m_eq, n) = ip.eq_jacobian(xs.head(n));
    J.bottomLeftCorner(m_in, n) = ip.in_jacobian(xs.head(n));
    J.bottomRightCorner(m_in, m_in) = Matrix::Identity(m_in, m_in);
    return J;
  };
  if (ip.start.size() == n) {
    Vector s0(n + m_in);
    s0.head(n) = ip.start;
    s0.tail(m_in) = (-ip.in_constraints(ip.start)).cwiseMax(0.0);
    out.start = s0;
  }
  return out;
}

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

NlpProblem make_eq_quadratic() {
  NlpProblem p;
  p.name = "eq_quadratic";
  p.n = 2;
  p.m = 1;
  const Vector xhat = vec2(1.0, 2.0);
  p.objective = [xhat](const Vector& x) { return 0.5 * (x - xhat).squaredNorm(); };
  p.gradient = [xhat](const Vector& x) -> Vector { return x - xhat; };
  p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x(0) + x(1) - 4.0); };
  p.jacobian = [](const Vector&) -> Matrix {
    Matrix J(1, 2);
    J << 1.0, 1.0;
    return J;
  };
  p.start = vec2(3.0, 0.5);
  // KKT point from one linear solve: x = xhat + a (b - a'xhat)/||a||^2
  p.known_solution = KnownSolution{vec2(1.5, 2.5), Vector::Constant(1, -0.5), Vector::Zero(2)};
  p.regular = true;
  p.lipschitz_gradient = 1.0;
  p.lipschitz_jacobian = 1e-4;
  return p;
}

NlpProblem make_bound_active() {
  NlpProblem p;
  p.name = "bound_active";
  p.n = 2;
  p.m = 0;
  const Vector xhat = vec2(-1.0, 2.0);
  p.objective = [xhat](const Vector& x) { return 0.5 * (x - xhat).squaredNorm(); };
  p.gradient = [xhat](const Vector& x) -> Vector { return x - xhat; };
  p.constraints = [](const Vector&) { return Vector(0); };
  p.jacobian = [](const Vector&) { return Matrix::Zero(0, 2); };
  p.start = vec2(2.0, 1.0);
  p.known_solution = KnownSolution{vec2(0.0, 2.0), Vector(0), vec2(1.0, 0.0)};
  p.regular = true;
  p.lipschitz_gradient = 1.0;
  p.lipschitz_jacobian = 1e-4;
  return p;
}

NlpProblem make_eq_bound_active() {
  NlpProblem p;
  p.name = "eq_bound_active";
  p.n = 3;
  p.m = 1;
  const Vector xhat = vec3(2.0, -1.0, 1.0);
  p.objective = [xhat](const Vector& x) { return 0.5 * (x - xhat).squaredNorm(); };
  p.gradient = [xhat](const Vector& x) -> Vector { return x - xhat; };
  p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x.sum() - 2.0); };
  p.jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 3); };
  p.start = vec3(0.5, 0.5, 1.0);
  p.known_solution = KnownSolution{vec3(1.5, 0.0, 0.5), Vector::Constant(1, 0.5), vec3(0.0, 1.5, 0.0)};
  p.regular = true;
  p.lipschitz_gradient = 1.0;
  p.lipschitz_jacobian = 1e-4;
  return p;
}

NlpProblem make_inf_stat_1d() {
  NlpProblem p;
  p.name = "inf_stat_1d";
  p.n = 1;
  p.m = 1;
  p.objective = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  p.gradient = [](const Vector& x) -> Vector { return x; };
  p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x(0) + 1.0); };
  p.jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 1); };
  p.start = Vector::Zero(1);
  // c(0) = 1, J'c = 1 > 0, x = 0: the start is an infeasible stationary
  // point and the feasible set is empty, so there is no KKT point.
  return p;
}

NlpProblem make_inf_stat_2d() {
  NlpProblem p;
  p.name = "inf_stat_2d";
  p.n = 2;
  p.m = 2;
  p.objective = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  p.gradient = [](const Vector& x) -> Vector { return x; };
  p.constraints = [](const Vector& x) -> Vector { return vec2(x(0) + 1.0, x(1) + 2.0); };
  p.jacobian = [](const Vector&) -> Matrix { return Matrix::Identity(2, 2); };
  p.start = Vector::Zero(2);
  return p;
}

NlpProblem make_circle_minnorm() {
  NlpProblem p;
  p.name = "circle_minnorm";
  p.n = 2;
  p.m = 1;
  p.objective = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  p.gradient = [](const Vector& x) -> Vector { return x; };
  p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x.squaredNorm() - 100.0); };
  p.jacobian = [](const Vector& x) -> Matrix { return 2.0 * x.transpose(); };
  // the start is almost rank-deficient and ||c|| is large; the objective is
  // constant on the feasible circle, so every feasible point is a KKT point
  p.start = vec2(0.1, 0.1);
  const double r = std::sqrt(50.0);
  p.known_solution = KnownSolution{vec2(r, r), Vector::Constant(1, -0.5), Vector::Zero(2)};
  p.regular = true;
  return p;
}

NlpProblem make_slack_box() {
  InequalityProblem ip;
  ip.name = "slack_box";
  ip.n = 2;
  ip.m_eq = 0;
  ip.m_in = 1;
  ip.objective = [](const Vector& x) { return 0.5 * ((x(0) - 2.0) * (x(0) - 2.0) + (x(1) - 1.0) * (x(1) - 1.0)); };
  ip.gradient = [](const Vector& x) -> Vector { return vec2(x(0) - 2.0, x(1) - 1.0); };
  ip.in_constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x(0) + x(1) - 1.0); };
  ip.in_jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 2); };
  ip.start = vec2(0.0, 0.0);
  NlpProblem p = add_slacks(ip);
  p.known_solution = KnownSolution{vec3(1.0, 0.0, 0.0), Vector::Constant(1, 1.0), vec3(0.0, 0.0, 1.0)};
  p.regular = true;
  p.lipschitz_gradient = 1.0;
  p.lipschitz_jacobian = 1e-4;
  return p;
}

NlpProblem make_slack_disk() {
  InequalityProblem ip;
  ip.name = "slack_disk";
  ip.n = 2;
  ip.m_eq = 0;
  ip.m_in = 1;
  ip.objective = [](const Vector& x) { return (x(0) - 3.0) * (x(0) - 3.0) + x(1) * x(1); };
  ip.gradient = [](const Vector& x) -> Vector { return vec2(2.0 * (x(0) - 3.0), 2.0 * x(1)); };
  ip.in_constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x.squaredNorm() - 4.0); };
  ip.in_jacobian = [](const Vector& x) -> Matrix { return 2.0 * x.transpose(); };
  ip.start = vec2(0.5, 0.5);
  NlpProblem p = add_slacks(ip);
  p.known_solution = KnownSolution{vec3(2.0, 0.0, 0.0), Vector::Constant(1, 0.5), vec3(0.0, 0.0, 0.5)};
  p.regular = true;
  p.lipschitz_gradient = 2.0;
  p.lipschitz_jacobian = 2.0;
  return p;
}

NlpProblem make_rosenbrock_eq() {
  NlpProblem p;
  p.name = "rosenbrock_eq";
  p.n = 2;
  p.m = 1;
  p.objective = [](const Vector& x) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    return a * a + 100.0 * b * b;
  };
  p.gradient = [](const Vector& x) -> Vector {
    const double b = x(1) - x(0) * x(0);
    return vec2(-2.0 * (1.0 - x(0)) - 400.0 * x(0) * b, 200.0 * b);
  };
  p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x(0) + x(1) - 2.0); };
  p.jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 2); };
  p.start = vec2(0.5, 1.2);
  p.known_solution = KnownSolution{vec2(1.0, 1.0), Vector::Zero(1), Vector::Zero(2)};
  p.regular = true;
  p.lipschitz_jacobian = 1e-4;
  return p;
}

NlpProblem make_lin_objective() {
  NlpProblem p;
  p.name = "lin_objective";
  p.n = 3;
  p.m = 1;
  const Vector cost = vec3(1.0, 2.0, 3.0);
  p.objective = [cost](const Vector& x) { return cost.dot(x); };
  p.gradient = [cost](const Vector&) -> Vector { return cost; };
  p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x.sum() - 1.0); };
  p.jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 3); };
  p.start = vec3(1.0 / 3, 1.0 / 3, 1.0 / 3);
  p.known_solution = KnownSolution{vec3(1.0, 0.0, 0.0), Vector::Constant(1, -1.0), vec3(0.0, 1.0, 2.0)};
  p.regular = true;
  p.lipschitz_gradient = 1e-4;
  p.lipschitz_jacobian = 1e-4;
  return p;
}

NlpProblem make_quartic_eq() {
  NlpProblem p;
  p.name = "quartic_eq";
  p.n = 2;
  p.m = 1;
  p.objective = [](const Vector& x) { return 0.25 * (std::pow(x(0), 4) + std::pow(x(1), 4)); };
  p.gradient = [](const Vector& x) -> Vector { return vec2(std::pow(x(0), 3), std::pow(x(1), 3)); };
  p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x(0) + x(1) - 2.0); };
  p.jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 2); };
  p.start = vec2(2.0, 0.5);
  p.known_solution = KnownSolution{vec2(1.0, 1.0), Vector::Constant(1, -1.0), Vector::Zero(2)};
  p.regular = true;
  p.lipschitz_jacobian = 1e-4;
  return p;
}

NlpProblem make_exp_eq() {
  NlpProblem p;
  p.name = "exp_eq";
  p.n = 2;
  p.m = 1;
  p.objective = [](const Vector& x) { return std::exp(x(0)) + 0.5 * x(1) * x(1); };
  p.gradient = [](const Vector& x) -> Vector { return vec2(std::exp(x(0)), x(1)); };
  p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x(0) + x(1) - 1.0); };
  p.jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 2); };
  p.start = vec2(1.0, 0.5);
  // e^0 = 1 balances the multiplier: x1 = 0 sits weakly at the bound
  p.known_solution = KnownSolution{vec2(0.0, 1.0), Vector::Constant(1, -1.0), Vector::Zero(2)};
  p.regular = true;
  p.lipschitz_jacobian = 1e-4;
  return p;
}

NlpProblem make_quad_n10() {
  const int n = 10;
  const int m = 3;
  Vector d(n), t(n);
  for (int i = 0; i < n; ++i) d(i) = 1.0 + 0.5 * i;
  t << 2.0, 1.0, 3.0, 2.5, 1.5, 2.0, 1.0, 2.2, 1.8, 2.6;
  Matrix A(m, n);
  A.row(0) = Vector::Ones(n).transpose();
  for (int i = 0; i < n; ++i) A(1, i) = (i % 2 == 0) ? 1.0 : -1.0;
  for (int i = 0; i < n; ++i) A(2, i) = static_cast<double>((3 * i) % 5) * 0.5;
  Vector shift(m);
  shift << 0.5, -0.5, 1.0;
  Vector b = A * t + shift;

  // KKT point by one linear solve of [D A'; A 0]
  Matrix kkt = Matrix::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = d.asDiagonal();
  kkt.topRightCorner(n, m) = A.transpose();
  kkt.bottomLeftCorner(m, n) = A;
  Vector rhs(n + m);
  rhs.head(n) = d.asDiagonal() * t;
  rhs.tail(m) = b;
  Vector sol = kkt.fullPivLu().solve(rhs);
  Vector xstar = sol.head(n);
  Vector ystar = sol.tail(m);  // D(x-t) + A'y = 0 matches the KKT stationarity block

  NlpProblem p;
  p.name = "quad_n10";
  p.n = n;
  p.m = m;
  p.objective = [d, t](const Vector& x) { return 0.5 * ((x - t).array().square() * d.array()).sum(); };
  p.gradient = [d, t](const Vector& x) -> Vector { return d.asDiagonal() * (x - t); };
  p.constraints = [A, b](const Vector& x) -> Vector { return A * x - b; };
  p.jacobian = [A](const Vector&) -> Matrix { return A; };
  p.start = Vector::Constant(n, 1.5);
  if (xstar.minCoeff() > 0.0) {
    p.known_solution = KnownSolution{xstar, ystar, Vector::Zero(n)};
  }
  p.regular = true;
  p.lipschitz_gradient = d.maxCoeff();
  p.lipschitz_jacobian = 1e-4;
  return p;
}

}  // namespace

const std::vector<NlpProblem>& builtin_suite() {
  static const std::vector<NlpProblem> suite = [] {
    std::vector<NlpProblem> s;
    s.push_back(make_eq_quadratic());
    s.push_back(make_bound_active());
    s.push_back(make_eq_bound_active());
    s.push_back(make_inf_stat_1d());
    s.push_back(make_inf_stat_2d());
    s.push_back(make_circle_minnorm());
    s.push_back(make_slack_box());
    s.push_back(make_slack_disk());
    s.push_back(make_rosenbrock_eq());
    s.push_back(make_lin_objective());
    s.push_back(make_quartic_eq());
    s.push_back(make_exp_eq());
    s.push_back(make_quad_n10());
    return s;
  }();
  return suite;
}

const NlpProblem* find_problem(const std::string& name) {
  for (const NlpProblem& p : builtin_suite()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<std::string> problem_names() {
  std::vector<std::string> names;
  for (const NlpProblem& p : builtin_suite()) names.push_back(p.name);
  return names;
}

}  // namespace ssqp
