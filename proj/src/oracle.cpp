#include "ssqp/oracle.hpp"

#include <cmath>

namespace ssqp {

namespace {
// stream tags keep gradient draws and auxiliary draws decorrelated
constexpr std::uint64_t kGradientStream = 0x67726164ULL;
constexpr std::uint64_t kAuxStream = 0x64697273ULL;
}  // namespace

const Matrix& GradientOracle::correlation_factor(int n) {
  if (cached_n_ != n) {
    Matrix cov = Matrix::Identity(n, n) + Matrix::Ones(n, n);
    factor_ = Eigen::LLT<Matrix>(cov).matrixL();
    cached_n_ = n;
  }
  return factor_;
}

Vector GradientOracle::sample(const NlpProblem& problem, const Vector& x, double std_scale) {
  const int n = problem.n;
  Vector g = problem.gradient(x);
  if (!g.allFinite()) throw EvaluationError("gradient evaluation returned non-finite values at problem " + problem.name);
  const std::uint64_t draw = samples_++;
  if (eps_g_ <= 0.0 || std_scale <= 0.0) return g;
  NormalStream stream(seed_, kGradientStream, draw);
  Vector xi(n);
  for (int i = 0; i < n; ++i) xi(i) = stream.next();
  return g + std::sqrt(eps_g_) * std_scale * (correlation_factor(n) * xi);
}

Vector GradientOracle::unit_direction(int n) {
  NormalStream stream(seed_, kAuxStream, aux_++);
  Vector u(n);
  for (int i = 0; i < n; ++i) u(i) = stream.next();
  const double norm = u.norm();
  if (norm < 1e-300) return Vector::Unit(n, 0);
  return u / norm;
}

Vector sample_gradient(GradientOracle& oracle, const NlpProblem& problem, const Vector& x) {
  return oracle.sample(problem, x);
}

}  // namespace ssqp
