#include "ssqp/sqp.hpp"

#include <cmath>
#include <sstream>

#include "ssqp/metrics.hpp"
#include "ssqp/step.hpp"

namespace ssqp {

const char* to_string(StepPolicy p) {
  switch (p) {
    case StepPolicy::GridGeometric: return "grid";
    case StepPolicy::MaxOfInterval: return "max";
    case StepPolicy::MinOfInterval: return "min";
  }
  return "unknown";
}

const char* to_string(BetaSchedule s) {
  return s == BetaSchedule::Constant ? "constant" : "diminishing";
}

const char* to_string(RecordStatus s) {
  return s == RecordStatus::Step ? "step" : "infeasible_stationary";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::InfeasibleStationary: return "infeasible_stationary";
    case Termination::BudgetExhausted: return "budget_exhausted";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::EarlyStop: return "early_stop";
  }
  return "unknown";
}

void AlgoParams::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(sigma)) throw ConfigError("sigma must lie in (0,1)");
  if (!in_unit(eta)) throw ConfigError("eta must lie in (0,1)");
  if (!in_unit(eps_tau)) throw ConfigError("eps_tau must lie in (0,1)");
  if (!in_unit(eps_xi)) throw ConfigError("eps_xi must lie in (0,1)");
  if (!(tau0 > 0)) throw ConfigError("tau0 must be positive");
  if (!(xi0 > 0)) throw ConfigError("xi0 must be positive");
  if (!(theta > 0)) throw ConfigError("theta must be positive");
  if (!(beta > 0 && beta <= 1)) throw ConfigError("beta must lie in (0,1]");
  if (!(L > 0)) throw ConfigError("L must be positive");
  if (!(Gamma > 0)) throw ConfigError("Gamma must be positive");
  if (!(zeta > 0)) throw ConfigError("zeta must be positive");
  if (!(kappa_H >= zeta)) throw ConfigError("kappa_H must be at least zeta");
  if (!(h_scale >= zeta && h_scale <= kappa_H)) throw ConfigError("h_scale must lie in [zeta, kappa_H]");
  if (max_gradient_samples < 0) throw ConfigError("max_gradient_samples must be nonnegative");
  if (max_iterations < 0) throw ConfigError("max_iterations must be nonnegative");
  if (!(grid_base > 1)) throw ConfigError("grid_base must exceed 1");
  if (!(mu_floor > 0)) throw ConfigError("mu_floor must be positive");
  if (mu_coef < 0) throw ConfigError("mu_coef must be nonnegative");
  if (lipschitz_interval < 1) throw ConfigError("lipschitz_interval must be at least 1");
  if (lipschitz_samples < 2) throw ConfigError("lipschitz_samples must be at least 2");
  if (!(lipschitz_radius_coef > 0)) throw ConfigError("lipschitz_radius_coef must be positive");
  if (!(lipschitz_floor > 0)) throw ConfigError("lipschitz_floor must be positive");
  if (!(qp_tol > 0)) throw ConfigError("qp_tol must be positive");
  if (!(feas_tol > 0)) throw ConfigError("feas_tol must be positive");
  if (!(step_tol > 0)) throw ConfigError("step_tol must be positive");
  if (!(d_zero_tol > 0)) throw ConfigError("d_zero_tol must be positive");
  if (!(early_stop_tol > 0)) throw ConfigError("early_stop_tol must be positive");
}

std::pair<double, double> update_merit_parameter(double tau_prev, const Vector& d,
                                                 double quad_value, double lin_gain,
                                                 double sigma, double eps_tau) {
  if (d.size() == 0 || inf_norm(d) == 0.0) return {kInf, tau_prev};
  double trial = kInf;
  if (quad_value > 0.0) trial = (1.0 - sigma) * lin_gain / quad_value;
  const double tau = tau_prev <= trial ? tau_prev : std::min((1.0 - eps_tau) * tau_prev, trial);
  if (!(tau > 0.0)) {
    std::ostringstream os;
    os << "merit parameter collapsed: trial " << trial << ", gain " << lin_gain << ", quad " << quad_value;
    throw StepError(os.str());
  }
  return {trial, tau};
}

std::pair<double, double> update_ratio_parameter(double xi_prev, double delta_l, double tau,
                                                 double d_norm_sq, double eps_xi) {
  if (d_norm_sq == 0.0) return {kInf, xi_prev};
  const double trial = delta_l / (tau * d_norm_sq);
  const double xi = xi_prev <= trial ? xi_prev : std::min((1.0 - eps_xi) * xi_prev, trial);
  if (!(xi > 0.0)) {
    std::ostringstream os;
    os << "ratio parameter collapsed: trial " << trial << ", delta_l " << delta_l;
    throw StepError(os.str());
  }
  return {trial, xi};
}

AlphaMin alpha_min(double beta, double xi, double tau, double L, double Gamma, double eta) {
  AlphaMin out;
  out.value = 2.0 * (1.0 - eta) * beta * xi * tau / (tau * L + Gamma);
  if (out.value > 1.0) {
    out.value = 1.0;
    out.clamped = true;
  }
  return out;
}

double eval_varphi(double alpha, double beta, double delta_l, const Vector& c, const Vector& Jd,
                   double tau, double L, double Gamma, double d_norm_sq, double eta) {
  double cn = 0.0, cjd = 0.0, cajd = 0.0;
  if (c.size() > 0) {
    cn = c.norm();
    cjd = (c + Jd).norm();
    cajd = (c + alpha * Jd).norm();
  }
  return (eta - 1.0) * alpha * beta * delta_l + cajd - cn + alpha * (cn - cjd) +
         0.5 * (tau * L + Gamma) * alpha * alpha * d_norm_sq;
}

double alpha_phi(double beta, double delta_l, const Vector& c, const Vector& Jd, double tau,
                 double L, double Gamma, double d_norm_sq, double eta) {
  if (!(delta_l > 0.0)) throw BracketFailure("alpha_phi: model reduction is not positive");
  const double curvature = (tau * L + Gamma) * d_norm_sq;
  if (!(curvature > 0.0)) throw BracketFailure("alpha_phi: zero curvature");
  const double closed_form = 2.0 * (1.0 - eta) * beta * delta_l / curvature;
  if (c.size() == 0 || (c.norm() == 0.0 && Jd.norm() == 0.0)) return closed_form;

  auto phi = [&](double a) { return eval_varphi(a, beta, delta_l, c, Jd, tau, L, Gamma, d_norm_sq, eta); };
  double hi = std::max(1.0, closed_form);
  while (phi(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e6) throw BracketFailure("alpha_phi: varphi stays nonpositive up to 1e6");
  }
  double lo = 0.0;  // varphi(0) = 0
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double select_step_size(double a_min, double a_max, StepPolicy policy,
                        const std::function<double(double)>& varphi, double grid_base) {
  if (!(a_min > 0.0) || a_max < a_min) throw ConfigError("select_step_size: empty interval");
  switch (policy) {
    case StepPolicy::MaxOfInterval:
      return a_max;
    case StepPolicy::MinOfInterval:
      return a_min;
    case StepPolicy::GridGeometric:
      break;
  }
  double value = a_min;
  double cand = a_min * grid_base;
  for (int guard = 0; guard < 4000 && value < a_max; ++guard) {
    if (varphi(cand) > 0.0) break;
    value = cand;
    cand *= grid_base;
  }
  return std::min(value, a_max);
}

LipschitzEstimate estimate_lipschitz(const NlpProblem& problem, GradientOracle& oracle,
                                     const Vector& x, double radius, int n_samples,
                                     bool use_true_gradient, double floor, double std_scale) {
  if (!(radius > 0.0)) throw ConfigError("estimate_lipschitz: radius must be positive");
  if (n_samples < 2) throw ConfigError("estimate_lipschitz: need at least two samples");
  const int n = problem.n;
  std::vector<Vector> points(n_samples), grads(n_samples);
  std::vector<Matrix> jacs;
  if (problem.m > 0) jacs.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    points[i] = (x + radius * oracle.unit_direction(n)).cwiseMax(0.0);
    grads[i] = use_true_gradient ? problem.gradient(points[i])
                                 : oracle.sample(problem, points[i], std_scale);
    if (problem.m > 0) jacs[i] = problem.jacobian(points[i]);
  }
  LipschitzEstimate est;
  est.L = floor;
  est.Gamma = floor;
  est.samples_drawn = n_samples;
  for (int i = 0; i < n_samples; ++i) {
    for (int j = i + 1; j < n_samples; ++j) {
      const double dx = (points[i] - points[j]).norm();
      if (dx <= 1e-14) continue;
      est.L = std::max(est.L, (grads[i] - grads[j]).norm() / dx);
      if (problem.m > 0) {
        Eigen::JacobiSVD<Matrix> svd(jacs[i] - jacs[j]);
        est.Gamma = std::max(est.Gamma, svd.singularValues()(0) / dx);
      }
    }
  }
  return est;
}

namespace {

double merit_value(double tau, double f, const Vector& c) {
  return tau * f + (c.size() > 0 ? c.norm() : 0.0);
}

double beta_at(const AlgoParams& params, const SqpState& state, long k) {
  if (params.beta_schedule == BetaSchedule::Constant) return params.beta;
  if (!params.beta_restart) return std::min(1.0, params.beta / static_cast<double>(k));
  const double div = static_cast<double>(k - state.beta_restart_k + 1);
  return std::min(1.0, state.beta_base / div);
}

}  // namespace

IterStatus sqp_iteration(SqpState& state, const NlpProblem& problem, GradientOracle& oracle,
                         const AlgoParams& params, IterationRecord& record) {
  const long k = state.k + 1;
  const int n = problem.n;

  const double beta_k = beta_at(params, state, k);
  const double anneal = (params.beta_schedule == BetaSchedule::Diminishing && params.anneal_noise)
                            ? beta_k / params.beta
                            : 1.0;

  if (params.estimate_lipschitz && (k - 1) % params.lipschitz_interval == 0) {
    const double radius = params.lipschitz_radius_coef * std::max(1.0, inf_norm(state.x));
    LipschitzEstimate est =
        estimate_lipschitz(problem, oracle, state.x, radius, params.lipschitz_samples,
                           params.deterministic, params.lipschitz_floor, anneal);
    state.L_est = est.L;
    state.Gamma_est = est.Gamma;
    if (params.count_estimation_samples) state.samples_used += est.samples_drawn;
  }

  EvalPoint eval = eval_point(problem, state.x);
  const double mu = std::max(params.mu_floor, params.mu_coef * eval.c.squaredNorm());

  record.k = k;
  record.x = state.x;
  record.c = eval.c;
  record.f = eval.f;
  record.c_inf = inf_norm(eval.c);
  record.mu = mu;
  record.L = state.L_est;
  record.Gamma = state.Gamma_est;
  record.beta = beta_k;

  NormalStep normal = normal_step(state.x, eval.c, eval.jac, mu, params.qp_tol, &state.warm_normal);
  state.warm_normal = normal.active_set;
  record.v = normal.v;
  record.Jv = eval.c.size() > 0 ? Vector(eval.jac * normal.v) : Vector(0);
  record.rank_deficient = normal.rank_deficient;

  if (is_infeasible_stationary(eval.c, normal.v, params.feas_tol, params.step_tol)) {
    record.status = RecordStatus::InfeasibleStationary;
    record.g = Vector(0);
    record.d = Vector(0);
    record.Jd = Vector(0);
    record.tau = state.tau_prev;
    record.xi = state.xi_prev;
    record.merit = merit_value(state.tau_prev, eval.f, eval.c);
    record.samples_used = state.samples_used;
    state.k = k;
    return IterStatus::InfeasibleStationary;
  }

  Vector g = params.deterministic ? problem.gradient(state.x)
                                  : oracle.sample(problem, state.x, anneal);
  state.samples_used += 1;
  record.g = g;

  const Matrix H = params.h_scale * Matrix::Identity(n, n);
  TangentialStep tangent =
      tangential_step(state.x, g, H, eval.jac, normal.v, params.qp_tol, &state.warm_tangential);
  state.warm_tangential = tangent.active_set;

  // snap tiny directions to exact zero; the Jv gate keeps the linearized
  // constraint transfer Jd = Jv intact after snapping (Jd_raw equals Jv)
  Vector d = tangent.d;
  if (inf_norm(d) <= params.d_zero_tol * std::max(1.0, inf_norm(state.x)) &&
      inf_norm(record.Jv) <= 1e-9) {
    d.setZero();
  }
  record.d = d;
  record.Jd = eval.c.size() > 0 ? Vector(eval.jac * d) : Vector(0);
  record.quad_value = tangent.quad_value;

  double tau = state.tau_prev;
  double xi = state.xi_prev;
  double alpha = 1.0;
  if (inf_norm(d) == 0.0) {
    record.tau_trial = kInf;
    record.tau = tau;
    record.xi_trial = kInf;
    record.xi = xi;
    record.alpha_min = record.alpha_phi = record.alpha_max = record.alpha = 1.0;
    record.delta_l = 0.0;
  } else {
    const double lin_gain = eval.c.size() > 0 ? eval.c.norm() - (eval.c + record.Jd).norm() : 0.0;
    auto [tau_trial, tau_new] =
        update_merit_parameter(state.tau_prev, d, tangent.quad_value, lin_gain, params.sigma, params.eps_tau);
    tau = tau_new;
    record.tau_trial = tau_trial;
    record.tau = tau;

    const double delta_l = model_reduction(tau, g, d, eval.c, eval.jac);
    record.delta_l = delta_l;
    const double d2 = d.squaredNorm();
    auto [xi_trial, xi_new] = update_ratio_parameter(state.xi_prev, delta_l, tau, d2, params.eps_xi);
    xi = xi_new;
    record.xi_trial = xi_trial;
    record.xi = xi;

    AlphaMin am = alpha_min(record.beta, xi, tau, state.L_est, state.Gamma_est, params.eta);
    record.alpha_min = am.value;
    record.alpha_min_clamped = am.clamped;
    record.alpha_phi = alpha_phi(record.beta, delta_l, eval.c, record.Jd, tau, state.L_est,
                                 state.Gamma_est, d2, params.eta);
    double a_max = std::min({1.0, record.alpha_phi, am.value + params.theta * record.beta});
    a_max = std::max(a_max, am.value);  // theory guarantees overlap; guards bisection roundoff
    record.alpha_max = a_max;

    auto phi = [&](double a) {
      return eval_varphi(a, record.beta, delta_l, eval.c, record.Jd, tau, state.L_est,
                         state.Gamma_est, d2, params.eta);
    };
    alpha = select_step_size(am.value, a_max, params.step_policy, phi, params.grid_base);
    record.alpha = alpha;
  }
  record.merit = merit_value(tau, eval.f, eval.c);

  if (params.compute_d_true || params.deterministic) {
    Vector gt = params.deterministic ? g : problem.gradient(state.x);
    record.grad_true = gt;
    if (params.deterministic) {
      record.d_true = d;
      record.y_true = tangent.y;
      record.z_true = tangent.z;
    } else {
      TangentialStep tt =
          tangential_step(state.x, gt, H, eval.jac, normal.v, params.qp_tol, &state.warm_true);
      state.warm_true = tt.active_set;
      record.d_true = tt.d;
      record.y_true = tt.y;
      record.z_true = tt.z;
    }
    record.delta_l_true = model_reduction(tau, gt, *record.d_true, eval.c, eval.jac);
    record.lin_gain_true =
        eval.c.size() > 0 ? eval.c.norm() - (eval.c + eval.jac * (*record.d_true)).norm() : 0.0;
    record.kkt_err_true = kkt_err(state.x, gt, eval.jac, *record.y_true, *record.z_true, eval.c);
  }

  if (params.beta_restart && params.beta_schedule == BetaSchedule::Diminishing &&
      (tau < state.tau_prev || xi < state.xi_prev)) {
    const double a_prime = 2.0 * (1.0 - params.eta) * xi * tau / (tau * state.L_est + state.Gamma_est);
    state.beta_restart_k = k;
    state.beta_base = std::min(1.0, params.beta * a_prime / (2.0 * (1.0 - params.eta) * (a_prime + params.theta)));
  }

  Vector x_next = state.x + alpha * d;
  for (int i = 0; i < n; ++i) {
    if (x_next(i) < 0.0) {
      if (x_next(i) < -1e-12) {
        std::ostringstream os;
        os << "iterate left the nonnegative orthant: x[" << i << "] = " << x_next(i);
        throw StepError(os.str());
      }
      x_next(i) = 0.0;
    }
  }

  record.samples_used = state.samples_used;
  state.x = x_next;
  state.tau_prev = tau;
  state.xi_prev = xi;
  state.k = k;
  return IterStatus::Step;
}

RunOutput run(const NlpProblem& problem, GradientOracle& oracle, const AlgoParams& params,
              const RecordObserver& observer, bool keep_trajectory) {
  params.validate();
  if (problem.start.size() != problem.n) throw ConfigError("run: problem has no start point");

  SqpState state;
  state.x = problem.start.cwiseMax(0.0);
  state.tau_prev = params.tau0;
  state.xi_prev = params.xi0;
  state.L_est = params.L;
  state.Gamma_est = params.Gamma;
  state.beta_base = params.beta;

  RunOutput out;
  while (true) {
    if (state.samples_used >= params.max_gradient_samples) {
      out.termination = Termination::BudgetExhausted;
      break;
    }
    if (state.k >= params.max_iterations) {
      out.termination = Termination::MaxIterations;
      break;
    }
    IterationRecord record;
    const IterStatus status = sqp_iteration(state, problem, oracle, params, record);
    if (observer) observer(record);
    const bool early = params.deterministic && params.early_stop && status == IterStatus::Step &&
                       record.kkt_err_true && record.c_inf <= params.early_stop_tol &&
                       *record.kkt_err_true <= params.early_stop_tol;
    if (keep_trajectory) out.trajectory.push_back(std::move(record));
    if (status == IterStatus::InfeasibleStationary) {
      out.termination = Termination::InfeasibleStationary;
      break;
    }
    if (early) {
      out.termination = Termination::EarlyStop;
      break;
    }
  }
  out.iterations = state.k;
  out.samples_used = state.samples_used;
  out.final_x = state.x;
  out.final_tau = state.tau_prev;
  out.final_xi = state.xi_prev;
  return out;
}

}  // namespace ssqp
