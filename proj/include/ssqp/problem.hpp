#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ssqp/types.hpp"

namespace ssqp {

struct KnownSolution {
  Vector x;  // primal KKT point
  Vector y;  // equality multipliers
  Vector z;  // bound multipliers, >= 0
};

// Smooth problem in the solver's native form:
//   min f(x)  s.t.  c(x) = 0,  x >= 0
// with f scalar, c of dimension m, and the constraint Jacobian J (m x n,
// row i the gradient of c_i). Evaluators are pure closures.
struct NlpProblem {
  int n = 0;
  int m = 0;
  std::string name;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  std::function<Vector(const Vector&)> constraints;
  std::function<Matrix(const Vector&)> jacobian;

  Vector start;  // documented starting point, >= 0
  std::optional<KnownSolution> known_solution;

  // full-rank Jacobian along typical runs and a known KKT point; such
  // problems are expected to be solved to tight tolerances in
  // true-gradient mode
  bool regular = false;

  // analytic smoothness bounds valid on the region runs visit, when known
  std::optional<double> lipschitz_gradient;
  std::optional<double> lipschitz_jacobian;
};

struct EvalPoint {
  double f = 0;
  Vector c;
  Matrix jac;
};

// Bundled evaluation; throws EvaluationError when any component is non-finite.
EvalPoint eval_point(const NlpProblem& problem, const Vector& x);

// General variable bounds, entries may be +-inf.
struct BoundsSpec {
  Vector lower;
  Vector upper;
  bool valid() const;
};

// Rewrites an l <= x <= u problem into the native nonnegativity form:
// finite lower bounds shift, upper-only bounds reflect, two-sided bounds
// shift plus a slack row, and free variables split into a difference of
// nonnegative parts. The known solution is carried over only in the
// pure-shift case.
NlpProblem to_nonnegative_form(const NlpProblem& problem, const BoundsSpec& bounds);

// Problem with explicit inequality block:
//   min f(x)  s.t.  c_eq(x) = 0,  c_in(x) <= 0,  x >= 0
struct InequalityProblem {
  int n = 0;
  int m_eq = 0;
  int m_in = 0;
  std::string name;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  std::function<Vector(const Vector&)> eq_constraints;
  std::function<Matrix(const Vector&)> eq_jacobian;
  std::function<Vector(const Vector&)> in_constraints;
  std::function<Matrix(const Vector&)> in_jacobian;
  Vector start;
};

// c_in(x) <= 0 becomes c_in(x) + s = 0 with slack variables s >= 0.
NlpProblem add_slacks(const InequalityProblem& problem);

// Built-in analytic test problems (n <= 20, m <= 10), each with a
// documented start and, where one exists, a documented KKT point.
const std::vector<NlpProblem>& builtin_suite();

// Registry lookup by name; nullptr when absent.
const NlpProblem* find_problem(const std::string& name);

std::vector<std::string> problem_names();

}  // namespace ssqp
