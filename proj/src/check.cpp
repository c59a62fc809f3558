#include "ssqp/check.hpp"

#include <cmath>
#include <sstream>

namespace ssqp {

namespace {
constexpr long kMaxStored = 64;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
}  // namespace

InvariantChecker::InvariantChecker(const AlgoParams& params)
    : params_(params), tau_prev_(params.tau0), xi_prev_(params.xi0) {}

void InvariantChecker::report(long k, const std::string& invariant, const std::string& detail) {
  ++total_violations_;
  if (static_cast<long>(stored_.size()) < kMaxStored) stored_.push_back({k, invariant, detail});
}

void InvariantChecker::add(const IterationRecord& rec) {
  ++checked_;
  const long k = rec.k;

  if (rec.x.size() > 0 && rec.x.minCoeff() < 0.0)
    report(k, "x_nonnegative", "min(x) = " + fmt(rec.x.minCoeff()));

  if (rec.status != RecordStatus::Step) return;  // termination record

  // merit parameter monotonicity
  if (rec.tau > tau_prev_) report(k, "tau_monotone", fmt(rec.tau) + " > " + fmt(tau_prev_));
  if (rec.tau < tau_prev_ && rec.tau > (1.0 - params_.eps_tau) * tau_prev_)
    report(k, "tau_decrease_factor", fmt(rec.tau) + " vs " + fmt((1.0 - params_.eps_tau) * tau_prev_));
  if (!(rec.tau > 0.0)) report(k, "tau_positive", fmt(rec.tau));

  // ratio parameter monotonicity and lower bound
  if (rec.xi > xi_prev_) report(k, "xi_monotone", fmt(rec.xi) + " > " + fmt(xi_prev_));
  if (rec.xi < xi_prev_ && rec.xi > (1.0 - params_.eps_xi) * xi_prev_)
    report(k, "xi_decrease_factor", fmt(rec.xi) + " vs " + fmt((1.0 - params_.eps_xi) * xi_prev_));
  const double xi_floor = std::min(params_.xi0, 0.5 * params_.zeta * (1.0 - params_.eps_xi));
  if (rec.xi < xi_floor - 1e-12) report(k, "xi_floor", fmt(rec.xi) + " < " + fmt(xi_floor));

  // model-reduction lower bound
  const double cn = rec.c.size() > 0 ? rec.c.norm() : 0.0;
  const double cjd = rec.c.size() > 0 ? (rec.c + rec.Jd).norm() : 0.0;
  const double bound = 0.5 * rec.tau * params_.zeta * rec.d.squaredNorm() + params_.sigma * (cn - cjd);
  if (rec.delta_l < bound - 1e-9)
    report(k, "delta_l_lower_bound", fmt(rec.delta_l) + " < " + fmt(bound));

  const bool d_zero = rec.d.size() == 0 || inf_norm(rec.d) == 0.0;
  if (d_zero) {
    if (rec.delta_l != 0.0) report(k, "delta_l_zero_step", fmt(rec.delta_l));
  } else if (!(rec.delta_l > 0.0)) {
    report(k, "delta_l_positive", fmt(rec.delta_l));
  }

  // step-size interval
  if (!(rec.alpha_min > 0.0)) report(k, "alpha_min_positive", fmt(rec.alpha_min));
  if (rec.alpha_min > rec.alpha_max)
    report(k, "alpha_interval", fmt(rec.alpha_min) + " > " + fmt(rec.alpha_max));
  if (rec.alpha_max > std::min(1.0, rec.alpha_phi) + 1e-12)
    report(k, "alpha_max_cap", fmt(rec.alpha_max) + " > min(1, " + fmt(rec.alpha_phi) + ") + 1e-12");
  if (rec.alpha < rec.alpha_min || rec.alpha > rec.alpha_max)
    report(k, "alpha_in_interval", fmt(rec.alpha));

  // varphi root certification
  if (!d_zero) {
    auto phi = [&](double a) {
      return eval_varphi(a, rec.beta, rec.delta_l, rec.c, rec.Jd, rec.tau, rec.L, rec.Gamma,
                         rec.d.squaredNorm(), params_.eta);
    };
    const double at_root = phi(rec.alpha_phi);
    if (at_root > 1e-10) report(k, "varphi_at_root", fmt(at_root));
    const double beyond = phi(rec.alpha_phi + 1e-6);
    if (!(beyond > 0.0)) report(k, "varphi_beyond_root", fmt(beyond));
  }

  // linearized constraint transfer
  if (rec.Jd.size() > 0 && inf_norm(rec.Jd - rec.Jv) > 1e-8)
    report(k, "constraint_transfer", fmt(inf_norm(rec.Jd - rec.Jv)));

  // direction-difference bound against the true-gradient solve
  if (rec.d_true && rec.grad_true && rec.g.size() > 0) {
    const double lhs = (rec.d - *rec.d_true).norm();
    const double rhs = (rec.g - *rec.grad_true).norm() / params_.zeta + 1e-7;
    if (lhs > rhs) report(k, "d_diff_bound", fmt(lhs) + " > " + fmt(rhs));
  }

  tau_prev_ = rec.tau;
  xi_prev_ = rec.xi;
}

std::vector<Violation> check_trace(const Trace& trace, long* checked) {
  InvariantChecker checker(trace.meta.params);
  for (const IterationRecord& rec : trace.records) checker.add(rec);
  if (checked) *checked = checker.checked();
  std::vector<Violation> out = checker.violations();
  if (checker.violation_count() > static_cast<long>(out.size())) {
    out.push_back({-1, "truncated",
                   std::to_string(checker.violation_count() - static_cast<long>(out.size())) +
                       " further violations not stored"});
  }
  return out;
}

}  // namespace ssqp
