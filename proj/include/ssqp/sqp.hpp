#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ssqp/oracle.hpp"
#include "ssqp/problem.hpp"
#include "ssqp/types.hpp"

namespace ssqp {

enum class StepPolicy { GridGeometric, MaxOfInterval, MinOfInterval };
enum class BetaSchedule { Constant, Diminishing };

const char* to_string(StepPolicy p);
const char* to_string(BetaSchedule s);

struct AlgoParams {
  double sigma = 0.1;
  double eta = 0.5;
  double eps_tau = 1e-2;
  double eps_xi = 1e-2;
  double tau0 = 0.1;
  double xi0 = 1.0;
  double theta = 1e4;
  double beta = 1.0;
  BetaSchedule beta_schedule = BetaSchedule::Constant;
  bool beta_restart = false;   // restart a diminishing schedule when tau or xi drops
  bool anneal_noise = false;   // scale the oracle noise variance by (beta_k/beta)^2
  double L = 1.0;             // objective-gradient Lipschitz constant or estimate
  double Gamma = 1.0;         // constraint-Jacobian Lipschitz constant or estimate
  double zeta = 1.0;          // H floors: zeta I <= H <= kappa_H I
  double kappa_H = 1.0;
  double h_scale = 1.0;  // H_k = h_scale * I
  long max_gradient_samples = 10000;
  long max_iterations = std::numeric_limits<long>::max();
  StepPolicy step_policy = StepPolicy::GridGeometric;
  double grid_base = 1.1;
  double mu_floor = 1e-8;  // mu_k = max(mu_floor, mu_coef ||c||^2)
  double mu_coef = 1e-4;
  bool estimate_lipschitz = true;
  int lipschitz_interval = 100;
  int lipschitz_samples = 10;
  double lipschitz_radius_coef = 1e-2;  // radius = coef * max(1, ||x||_inf)
  double lipschitz_floor = 1e-4;
  bool count_estimation_samples = true;
  bool compute_d_true = false;
  bool deterministic = false;
  bool early_stop = false;  // deterministic mode only
  double early_stop_tol = 1e-8;
  double qp_tol = 1e-9;
  double feas_tol = 1e-8;
  double step_tol = 1e-9;    // normal-direction zero threshold
  double d_zero_tol = 1e-10;  // ||d||_inf <= tol * max(1, ||x||_inf)

  void validate() const;  // throws ConfigError on out-of-range values
};

enum class RecordStatus { Step, InfeasibleStationary };
enum class IterStatus { Step, InfeasibleStationary, BudgetExhausted };
enum class Termination { InfeasibleStationary, BudgetExhausted, MaxIterations, EarlyStop };

const char* to_string(RecordStatus s);
const char* to_string(Termination t);

// Everything an iteration produced, enough to replay every update formula
// and re-check the per-iteration invariants offline.
struct IterationRecord {
  long k = 0;
  RecordStatus status = RecordStatus::Step;
  Vector x;  // iterate the step was computed at
  Vector g;
  Vector v;
  Vector d;
  Vector c;
  Vector Jd;
  Vector Jv;
  std::optional<Vector> grad_true;
  std::optional<Vector> d_true;
  std::optional<Vector> y_true;
  std::optional<Vector> z_true;
  double f = 0;
  double quad_value = 0;  // g'd + 1/2 d'Hd
  double tau_trial = kInf;
  double tau = 0;
  double xi_trial = kInf;
  double xi = 0;
  double alpha_min = 1;
  double alpha_phi = 1;
  double alpha_max = 1;
  double alpha = 1;
  bool alpha_min_clamped = false;
  double delta_l = 0;
  std::optional<double> delta_l_true;
  std::optional<double> lin_gain_true;  // ||c|| - ||c + J d_true||
  double c_inf = 0;                     // feasibility error ||c||_inf
  double merit = 0;                     // tau f + ||c||_2
  double beta = 0;
  double mu = 0;
  double L = 0;
  double Gamma = 0;
  std::optional<double> kkt_err_true;
  long samples_used = 0;
  bool rank_deficient = false;
};

struct SqpState {
  long k = 0;  // completed iterations
  Vector x;
  double tau_prev = 0;
  double xi_prev = 0;
  long samples_used = 0;
  long beta_restart_k = 1;  // start of the current diminishing window
  double beta_base = 1.0;   // numerator of a restarted diminishing schedule
  double L_est = 0;
  double Gamma_est = 0;
  // warm-start bookkeeping across iterations of one run
  std::vector<int> warm_normal, warm_tangential, warm_true;
};

// (9)-(10): trial value from the decrease ratio, then monotone update with
// factor (1 - eps_tau). d must be exactly zero for the carry branch.
std::pair<double, double> update_merit_parameter(double tau_prev, const Vector& d,
                                                 double quad_value, double lin_gain,
                                                 double sigma, double eps_tau);

// (11): same monotone rule for the reduction/step-norm ratio.
std::pair<double, double> update_ratio_parameter(double xi_prev, double delta_l, double tau,
                                                 double d_norm_sq, double eps_xi);

struct AlphaMin {
  double value = 0;
  bool clamped = false;  // formula exceeded 1 and was cut back
};

// (12): 2(1-eta) beta xi tau / (tau L + Gamma), clamped into (0, 1].
AlphaMin alpha_min(double beta, double xi, double tau, double L, double Gamma, double eta);

// (13)
double eval_varphi(double alpha, double beta, double delta_l, const Vector& c, const Vector& Jd,
                   double tau, double L, double Gamma, double d_norm_sq, double eta);

// (14): largest nonnegative root of varphi; closed form without equality
// constraints, bracketing bisection to 1e-12 otherwise.
double alpha_phi(double beta, double delta_l, const Vector& c, const Vector& Jd, double tau,
                 double L, double Gamma, double d_norm_sq, double eta);

// Chooses alpha in [alpha_min, alpha_max]; the grid policy walks
// alpha_min * base^t while varphi stays nonpositive.
double select_step_size(double a_min, double a_max, StepPolicy policy,
                        const std::function<double(double)>& varphi, double grid_base = 1.1);

struct LipschitzEstimate {
  double L = 0;
  double Gamma = 0;
  long samples_drawn = 0;
};

// Pairwise difference quotients of (stochastic) gradients and constraint
// Jacobians at points scattered around x, floored away from zero. std_scale
// multiplies the oracle noise deviation, matching the draw made in the same
// iteration under an annealing schedule.
LipschitzEstimate estimate_lipschitz(const NlpProblem& problem, GradientOracle& oracle,
                                     const Vector& x, double radius, int n_samples,
                                     bool use_true_gradient = false, double floor = 1e-4,
                                     double std_scale = 1.0);

struct RunOutput {
  std::vector<IterationRecord> trajectory;
  Termination termination = Termination::BudgetExhausted;
  long iterations = 0;
  long samples_used = 0;
  Vector final_x;
  double final_tau = 0;
  double final_xi = 0;
};

using RecordObserver = std::function<void(const IterationRecord&)>;

// One full iteration: normal step, infeasible-stationarity test, gradient
// draw, tangential step, parameter and step-size updates, iterate move.
IterStatus sqp_iteration(SqpState& state, const NlpProblem& problem, GradientOracle& oracle,
                         const AlgoParams& params, IterationRecord& record);

RunOutput run(const NlpProblem& problem, GradientOracle& oracle, const AlgoParams& params,
              const RecordObserver& observer = nullptr, bool keep_trajectory = true);

}  // namespace ssqp
