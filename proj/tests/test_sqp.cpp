#include <doctest.h>

#include <cmath>

#include "ssqp/metrics.hpp"
#include "ssqp/oracle.hpp"
#include "ssqp/problem.hpp"
#include "ssqp/sqp.hpp"
#include "ssqp/trace.hpp"

using namespace ssqp;

TEST_CASE("merit parameter update") {
  SUBCASE("zero direction carries the previous value") {
    auto [trial, tau] = update_merit_parameter(0.1, Vector::Zero(3), 1.0, 1.0, 0.1, 0.01);
    CHECK(std::isinf(trial));
    CHECK(tau == doctest::Approx(0.1));
  }
  SUBCASE("large trial keeps tau") {
    auto [trial, tau] = update_merit_parameter(0.1, Vector::Ones(2), 3.0, 1.0, 0.1, 0.01);
    CHECK(trial == doctest::Approx(0.3));
    CHECK(tau == doctest::Approx(0.1));
  }
  SUBCASE("small trial cuts tau below the factor") {
    auto [trial, tau] = update_merit_parameter(0.1, Vector::Ones(2), 18.0, 1.0, 0.1, 0.01);
    CHECK(trial == doctest::Approx(0.05));
    CHECK(tau == doctest::Approx(0.05));
  }
  SUBCASE("nonpositive curvature means an infinite trial") {
    auto [trial, tau] = update_merit_parameter(0.1, Vector::Ones(2), -2.0, 1.0, 0.1, 0.01);
    CHECK(std::isinf(trial));
    CHECK(tau == doctest::Approx(0.1));
  }
}

TEST_CASE("ratio parameter update") {
  SUBCASE("zero direction") {
    auto [trial, xi] = update_ratio_parameter(1.0, 0.0, 0.1, 0.0, 0.01);
    CHECK(std::isinf(trial));
    CHECK(xi == doctest::Approx(1.0));
  }
  SUBCASE("large trial keeps xi") {
    auto [trial, xi] = update_ratio_parameter(1.0, 0.5, 0.1, 1.0, 0.01);
    CHECK(trial == doctest::Approx(5.0));
    CHECK(xi == doctest::Approx(1.0));
  }
  SUBCASE("small trial cuts xi") {
    auto [trial, xi] = update_ratio_parameter(1.0, 0.05, 0.1, 10.0, 0.01);
    CHECK(trial == doctest::Approx(0.05));
    CHECK(xi == doctest::Approx(0.05));
  }
}

TEST_CASE("step-size lower bound") {
  AlphaMin am = alpha_min(1.0, 1.0, 0.1, 1.0, 1.0, 0.5);
  CHECK(am.value == doctest::Approx(0.1 / 1.1));
  CHECK_FALSE(am.clamped);

  // monotone in beta toward zero
  double prev = am.value;
  for (double beta : {0.5, 0.1, 0.01}) {
    const double v = alpha_min(beta, 1.0, 0.1, 1.0, 1.0, 0.5).value;
    CHECK(v < prev);
    prev = v;
  }

  // formula value 1.4 clamps to 1
  AlphaMin clamped = alpha_min(1.0, 2.8, 1.0, 1.0, 1.0, 0.5);
  CHECK(clamped.value == doctest::Approx(1.0));
  CHECK(clamped.clamped);
}

TEST_CASE("varphi evaluation") {
  const Vector empty(0);
  CHECK(eval_varphi(0.0, 1.0, 1.0, empty, empty, 0.1, 1.0, 1.0, 1.0, 0.5) == doctest::Approx(0.0));
  CHECK(eval_varphi(1.0, 1.0, 1.0, empty, empty, 0.1, 1.0, 1.0, 1.0, 0.5) ==
        doctest::Approx(0.05));
  CHECK(eval_varphi(0.5, 1.0, 1.0, empty, empty, 0.1, 1.0, 1.0, 1.0, 0.5) ==
        doctest::Approx(-0.1125));
}

TEST_CASE("varphi root") {
  const Vector empty(0);
  SUBCASE("closed form without equality rows") {
    const double root = alpha_phi(1.0, 1.0, empty, empty, 0.1, 1.0, 1.0, 1.0, 0.5);
    CHECK(root == doctest::Approx(1.0 / 1.1));
    // linear in the model reduction
    CHECK(alpha_phi(1.0, 2.0, empty, empty, 0.1, 1.0, 1.0, 1.0, 0.5) ==
          doctest::Approx(2.0 / 1.1));
  }
  SUBCASE("bisection root matches a dense grid scan") {
    Vector c = Vector::Constant(1, 1.0);
    Vector Jd = Vector::Constant(1, -1.0);
    const double root = alpha_phi(1.0, 1.0, c, Jd, 0.1, 1.0, 1.0, 1.0, 0.5);
    // scan 10^6 points of [0, 2] for the last nonpositive value
    double best = 0.0;
    for (int i = 0; i <= 1000000; ++i) {
      const double a = 2.0 * i / 1000000.0;
      if (eval_varphi(a, 1.0, 1.0, c, Jd, 0.1, 1.0, 1.0, 1.0, 0.5) <= 0.0) best = a;
    }
    CHECK(std::abs(root - best) <= 1e-5);
    CHECK(eval_varphi(root, 1.0, 1.0, c, Jd, 0.1, 1.0, 1.0, 1.0, 0.5) <= 1e-10);
    CHECK(eval_varphi(root + 1e-6, 1.0, 1.0, c, Jd, 0.1, 1.0, 1.0, 1.0, 0.5) > 0.0);
  }
  SUBCASE("unbounded nonpositive varphi is reported") {
    // delta_l <= 0 cannot certify a root
    CHECK_THROWS_AS(alpha_phi(1.0, 0.0, empty, empty, 0.1, 1.0, 1.0, 1.0, 0.5), BracketFailure);
  }
}

TEST_CASE("step-size selection policies") {
  const Vector empty(0);
  auto phi = [&](double a) { return eval_varphi(a, 1.0, 1.0, empty, empty, 0.1, 1.0, 1.0, 1.0, 0.5); };

  SUBCASE("degenerate interval") {
    CHECK(select_step_size(0.25, 0.25, StepPolicy::GridGeometric, phi) == doctest::Approx(0.25));
    CHECK(select_step_size(0.25, 0.25, StepPolicy::MaxOfInterval, phi) == doctest::Approx(0.25));
    CHECK(select_step_size(0.25, 0.25, StepPolicy::MinOfInterval, phi) == doctest::Approx(0.25));
  }
  SUBCASE("endpoint policies") {
    CHECK(select_step_size(0.1, 0.9, StepPolicy::MaxOfInterval, phi) == doctest::Approx(0.9));
    CHECK(select_step_size(0.1, 0.9, StepPolicy::MinOfInterval, phi) == doctest::Approx(0.1));
  }
  SUBCASE("geometric grid walks to just below the root") {
    const double a_min = 0.1 / 1.1;            // formula value
    const double root = 1.0 / 1.1;             // varphi root
    const double a_max = std::min(1.0, root);  // theta*beta huge
    const double alpha = select_step_size(a_min, a_max, StepPolicy::GridGeometric, phi);
    const double expected = a_min * std::pow(1.1, 24);  // 24 = max t with grid value <= root
    CHECK(alpha == doctest::Approx(expected).epsilon(1e-12));
    CHECK(alpha <= root);
    CHECK(root < a_min * std::pow(1.1, 25));
  }
}

TEST_CASE("lipschitz estimation") {
  SUBCASE("unit quadratic gives exactly one") {
    NlpProblem p;
    p.n = 3;
    p.m = 1;
    p.name = "q";
    p.objective = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
    p.gradient = [](const Vector& x) -> Vector { return x; };
    p.constraints = [](const Vector& x) -> Vector { return Vector::Constant(1, x.sum()); };
    p.jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 3); };
    GradientOracle oracle(0.0, 5);
    LipschitzEstimate est = estimate_lipschitz(p, oracle, Vector::Ones(3), 0.1, 10);
    CHECK(est.L == 1.0);
    CHECK(est.Gamma == 1e-4);  // constant Jacobian hits the floor
    CHECK(est.samples_drawn == 10);
  }
  SUBCASE("diagonal scaling is bracketed by the extreme eigenvalues") {
    NlpProblem p;
    p.n = 2;
    p.m = 0;
    p.name = "diag";
    Vector dscale(2);
    dscale << 1.0, 4.0;
    p.objective = [dscale](const Vector& x) { return 0.5 * (x.array().square() * dscale.array()).sum(); };
    p.gradient = [dscale](const Vector& x) -> Vector { return dscale.asDiagonal() * x; };
    p.constraints = [](const Vector&) { return Vector(0); };
    p.jacobian = [](const Vector&) { return Matrix::Zero(0, 2); };
    GradientOracle oracle(0.0, 11);
    LipschitzEstimate est = estimate_lipschitz(p, oracle, Vector::Ones(2), 0.5, 10);
    CHECK(est.L >= 1.0);
    CHECK(est.L <= 4.0 + 1e-12);
  }
}

TEST_CASE("an iteration at a KKT point leaves the state unchanged") {
  NlpProblem p = *find_problem("eq_quadratic");
  p.start = p.known_solution->x;
  GradientOracle oracle(0.0, 3);
  AlgoParams params;
  params.max_iterations = 1;
  params.estimate_lipschitz = false;
  RunOutput out = run(p, oracle, params);
  REQUIRE(out.trajectory.size() == 1);
  const IterationRecord& rec = out.trajectory[0];
  CHECK(inf_norm(rec.d) == 0.0);
  CHECK(rec.alpha == doctest::Approx(1.0));
  CHECK(rec.tau == doctest::Approx(params.tau0));
  CHECK(std::isinf(rec.tau_trial));
  CHECK(inf_norm(out.final_x - p.start) == 0.0);
}

TEST_CASE("infeasible stationary start terminates immediately") {
  const NlpProblem* p = find_problem("inf_stat_1d");
  GradientOracle oracle(1e-2, 9);
  AlgoParams params;
  RunOutput out = run(*p, oracle, params);
  CHECK(out.termination == Termination::InfeasibleStationary);
  REQUIRE(out.trajectory.size() == 1);
  CHECK(out.trajectory[0].k == 1);
  CHECK(out.trajectory[0].status == RecordStatus::InfeasibleStationary);
  CHECK(inf_norm(out.final_x - p->start) == 0.0);
}

TEST_CASE("one deterministic iteration decreases the merit function") {
  NlpProblem p = *find_problem("eq_quadratic");
  GradientOracle oracle(0.0, 1);
  AlgoParams params;
  params.deterministic = true;
  params.max_iterations = 1;
  params.estimate_lipschitz = false;
  params.L = 1.0;
  params.Gamma = 1e-4;
  RunOutput out = run(p, oracle, params);
  REQUIRE(out.trajectory.size() == 1);
  const IterationRecord& rec = out.trajectory[0];
  REQUIRE(inf_norm(rec.d) > 0.0);
  Vector x_next = rec.x + rec.alpha * rec.d;
  const double merit_next = rec.tau * p.objective(x_next) + p.constraints(x_next).norm();
  CHECK(merit_next < rec.merit);
}

TEST_CASE("zero budget gives an empty trajectory") {
  const NlpProblem* p = find_problem("eq_quadratic");
  GradientOracle oracle(1e-2, 123);
  AlgoParams params;
  params.max_gradient_samples = 0;
  RunOutput out = run(*p, oracle, params);
  CHECK(out.termination == Termination::BudgetExhausted);
  CHECK(out.trajectory.empty());
  CHECK(out.samples_used == 0);
}

TEST_CASE("replays are bitwise identical") {
  const NlpProblem* p = find_problem("slack_disk");
  AlgoParams params;
  params.max_gradient_samples = 300;
  params.compute_d_true = true;
  auto run_once = [&]() {
    GradientOracle oracle(1e-2, 77);
    return run(*p, oracle, params);
  };
  RunOutput a = run_once();
  RunOutput b = run_once();
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(record_to_json(a.trajectory[i]) == record_to_json(b.trajectory[i]));
  }
  CHECK(inf_norm(a.final_x - b.final_x) == 0.0);
}

TEST_CASE("iterates stay in the nonnegative orthant under noise") {
  const NlpProblem* p = find_problem("slack_box");
  GradientOracle oracle(1e-1, 5);
  AlgoParams params;
  params.max_gradient_samples = 500;
  RunOutput out = run(*p, oracle, params);
  for (const IterationRecord& rec : out.trajectory) {
    CHECK(rec.x.minCoeff() >= 0.0);
  }
  CHECK(out.final_x.minCoeff() >= 0.0);
}

TEST_CASE("merit and ratio parameters are monotone along a noisy run") {
  const NlpProblem* p = find_problem("eq_bound_active");
  GradientOracle oracle(1e-2, 15);
  AlgoParams params;
  params.max_gradient_samples = 800;
  RunOutput out = run(*p, oracle, params);
  double tau = params.tau0, xi = params.xi0;
  for (const IterationRecord& rec : out.trajectory) {
    if (rec.status != RecordStatus::Step) continue;
    CHECK(rec.tau <= tau);
    if (rec.tau < tau) CHECK(rec.tau <= (1.0 - params.eps_tau) * tau);
    CHECK(rec.xi <= xi);
    if (rec.xi < xi) CHECK(rec.xi <= (1.0 - params.eps_xi) * xi);
    CHECK(rec.xi >= 0.5 * params.zeta * (1.0 - params.eps_xi));
    CHECK(rec.alpha >= rec.alpha_min);
    CHECK(rec.alpha <= rec.alpha_max);
    tau = rec.tau;
    xi = rec.xi;
  }
}

TEST_CASE("sample accounting includes estimation draws") {
  const NlpProblem* p = find_problem("eq_quadratic");
  AlgoParams params;
  params.max_gradient_samples = 250;
  params.lipschitz_interval = 100;
  params.lipschitz_samples = 10;

  GradientOracle with_est(1e-2, 4);
  RunOutput a = run(*p, with_est, params);
  // refreshes at k = 1, 101, 201: 30 estimation draws by iteration 201
  CHECK(a.samples_used == a.iterations + 30);

  params.count_estimation_samples = false;
  GradientOracle without_count(1e-2, 4);
  RunOutput b = run(*p, without_count, params);
  CHECK(b.samples_used == b.iterations);
}

TEST_CASE("deterministic mode converges and can stop early") {
  for (const char* name : {"eq_quadratic", "slack_box", "bound_active"}) {
    CAPTURE(name);
    const NlpProblem* p = find_problem(name);
    GradientOracle oracle(0.0, 0);
    AlgoParams params;
    params.deterministic = true;
    params.early_stop = true;
    params.max_iterations = 2000;
    params.max_gradient_samples = 100000;
    RunOutput out = run(*p, oracle, params);
    REQUIRE(!out.trajectory.empty());
    const IterationRecord& last = out.trajectory.back();
    REQUIRE(last.kkt_err_true.has_value());
    CHECK(last.c_inf <= 1e-6);
    CHECK(*last.kkt_err_true <= 1e-6);
    CHECK(out.termination == Termination::EarlyStop);
  }
}

TEST_CASE("expected merit inequality holds with known smoothness constants") {
  // valid global upper bounds for this problem: L = 1 (identity Hessian),
  // Gamma = 1e-4 >= 0 (linear constraints)
  const NlpProblem* p = find_problem("eq_quadratic");
  AlgoParams params;
  params.deterministic = false;
  params.compute_d_true = true;
  params.estimate_lipschitz = false;
  params.L = 1.0;
  params.Gamma = 1e-4;
  params.max_gradient_samples = 300;
  GradientOracle oracle(1e-2, 21);
  RunOutput out = run(*p, oracle, params);
  int checked = 0;
  for (const IterationRecord& rec : out.trajectory) {
    if (rec.status != RecordStatus::Step || !rec.d_true) continue;
    Vector x_next = rec.x + rec.alpha * rec.d;
    const double phi_next = rec.tau * p->objective(x_next) + p->constraints(x_next).norm();
    const double lhs = phi_next - rec.merit;
    const double rhs = -rec.alpha * (*rec.delta_l_true) +
                       rec.alpha * rec.tau * rec.grad_true->dot(rec.d - *rec.d_true) +
                       (1.0 - params.eta) * rec.alpha * rec.beta * rec.delta_l;
    CHECK(lhs <= rhs + 1e-8 * (1.0 + std::abs(rec.merit)));
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("diminishing beta schedule with annealed noise") {
  const NlpProblem* p = find_problem("eq_quadratic");
  AlgoParams params;
  params.beta_schedule = BetaSchedule::Diminishing;
  params.anneal_noise = true;
  params.compute_d_true = true;
  params.max_gradient_samples = 400;
  params.estimate_lipschitz = false;
  params.L = 1.0;
  params.Gamma = 1e-4;
  GradientOracle oracle(1e-2, 31);
  RunOutput out = run(*p, oracle, params);
  REQUIRE(out.trajectory.size() > 100);
  CHECK(out.trajectory[0].beta == doctest::Approx(1.0));
  CHECK(out.trajectory[9].beta == doctest::Approx(0.1));
  // annealed noise drives the step difference to zero
  const IterationRecord& last = out.trajectory.back();
  CHECK((last.d - *last.d_true).norm() <= 1e-3);
}

TEST_CASE("parameter validation rejects bad ranges") {
  AlgoParams params;
  params.sigma = 1.0;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = AlgoParams{};
  params.kappa_H = 0.5;  // below zeta
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = AlgoParams{};
  params.beta = 1.5;
  CHECK_THROWS_AS(params.validate(), ConfigError);
}
