#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ssqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A problem evaluator returned a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

// A step subproblem could not be solved.
class StepError : public std::runtime_error {
 public:
  explicit StepError(const std::string& what) : std::runtime_error(what) {}
};

// The step-size root finder could not bracket a sign change.
class BracketFailure : public std::runtime_error {
 public:
  explicit BracketFailure(const std::string& what) : std::runtime_error(what) {}
};

// Enumeration oracle refused a problem that is too large.
class DimensionTooLarge : public std::invalid_argument {
 public:
  explicit DimensionTooLarge(const std::string& what) : std::invalid_argument(what) {}
};

// Best-iterate selection requires true-gradient multipliers in the trajectory.
class MissingTrueMultipliers : public std::runtime_error {
 public:
  explicit MissingTrueMultipliers(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration (parameter ranges, unknown keys, ...).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

inline double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace ssqp
