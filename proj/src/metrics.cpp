#include "ssqp/metrics.hpp"

#include <cmath>

#include "ssqp/step.hpp"

namespace ssqp {

double feas_err(const Vector& c) { return inf_norm(c); }

double kkt_err(const Vector& x, const Vector& grad_f, const Matrix& jac, const Vector& y,
               const Vector& z, const Vector& c) {
  double err = 0.0;
  Vector stat = grad_f - z;
  if (jac.rows() > 0) stat += jac.transpose() * y;
  err = std::max(err, inf_norm(stat));
  err = std::max(err, inf_norm(c));
  err = std::max(err, inf_norm(x.cwiseMin(0.0)));
  err = std::max(err, inf_norm(z.cwiseMin(0.0)));
  err = std::max(err, inf_norm(x.cwiseProduct(z)));
  return err;
}

TrueDirection true_direction(const Vector& x, const NlpProblem& problem, const Matrix& H,
                             const Matrix& jac, const Vector& v, double qp_tol) {
  Vector g = problem.gradient(x);
  TangentialStep step = tangential_step(x, g, H, jac, v, qp_tol);
  return TrueDirection{step.d, step.y, step.z};
}

double stationarity_measure(double tau, double zeta, double sigma, const Vector& d_true,
                            const Vector& c, const Matrix& jac) {
  const double gain = c.size() > 0 ? c.norm() - (c + jac * d_true).norm() : 0.0;
  return 0.5 * tau * zeta * d_true.squaredNorm() + sigma * gain;
}

void BestIterateTracker::add(long k, double feas, double kkt) {
  ++count_;
  if (feas < best_feas_) {
    best_feas_ = feas;
    best_feas_k_ = k;
    best_feas_kkt_ = kkt;
  }
  if (feas <= threshold_ && kkt < best_kkt_) {
    best_kkt_ = kkt;
    best_kkt_k_ = k;
    best_kkt_feas_ = feas;
  }
}

long BestIterateTracker::index() const {
  if (count_ == 0) throw MissingTrueMultipliers("best iterate of an empty trajectory");
  return best_kkt_k_ >= 0 ? best_kkt_k_ : best_feas_k_;
}

double BestIterateTracker::feas() const { return best_kkt_k_ >= 0 ? best_kkt_feas_ : best_feas_; }

double BestIterateTracker::kkt() const { return best_kkt_k_ >= 0 ? best_kkt_ : best_feas_kkt_; }

std::size_t best_iterate(const std::vector<IterationRecord>& trajectory, double feas_threshold) {
  if (trajectory.empty()) throw MissingTrueMultipliers("best_iterate: empty trajectory");
  BestIterateTracker tracker(feas_threshold);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const IterationRecord& rec = trajectory[i];
    if (rec.status != RecordStatus::Step) continue;
    if (!rec.kkt_err_true)
      throw MissingTrueMultipliers("best_iterate: record " + std::to_string(rec.k) +
                                   " has no true-gradient multipliers");
    tracker.add(static_cast<long>(i), rec.c_inf, *rec.kkt_err_true);
  }
  if (tracker.empty()) throw MissingTrueMultipliers("best_iterate: no step records");
  return static_cast<std::size_t>(tracker.index());
}

}  // namespace ssqp
