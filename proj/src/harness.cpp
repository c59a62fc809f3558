#include "ssqp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "ssqp/check.hpp"
#include "ssqp/metrics.hpp"
#include "ssqp/oracle.hpp"
#include "ssqp/problem.hpp"
#include "ssqp/trace.hpp"

namespace ssqp {

void ExperimentConfig::validate() const {
  if (problems.empty()) throw ConfigError("experiment needs at least one problem");
  if (seeds < 1) throw ConfigError("seeds must be at least 1");
  if (budget < 0) throw ConfigError("budget must be nonnegative");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  for (const std::string& name : problems) {
    if (name != "all" && find_problem(name) == nullptr)
      throw ConfigError("unknown problem '" + name + "'");
  }
}

std::vector<std::string> ExperimentConfig::resolved_problems() const {
  if (problems.size() == 1 && problems[0] == "all") return problem_names();
  return problems;
}

std::vector<double> ExperimentConfig::resolved_eps() const {
  if (deterministic) return {0.0};
  return eps_g;
}

namespace {

struct Cell {
  std::string problem;
  double eps = 0;
  std::uint64_t seed = 0;
};

RunResult run_cell(const ExperimentConfig& config, const Cell& cell) {
  RunResult result;
  result.problem = cell.problem;
  result.seed = cell.seed;
  result.eps_g = cell.eps;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const NlpProblem* problem = find_problem(cell.problem);
    if (!problem) throw ConfigError("unknown problem '" + cell.problem + "'");
    AlgoParams params = config.params;
    params.max_gradient_samples = config.budget;
    params.deterministic = config.deterministic;
    params.compute_d_true = true;  // best-iterate selection needs true multipliers
    GradientOracle oracle(cell.eps, cell.seed);
    BestIterateTracker tracker;
    auto observer = [&tracker](const IterationRecord& rec) {
      if (rec.status == RecordStatus::Step && rec.kkt_err_true)
        tracker.add(rec.k, rec.c_inf, *rec.kkt_err_true);
    };
    RunOutput out = run(*problem, oracle, params, observer, /*keep_trajectory=*/false);
    result.iterations = out.iterations;
    result.samples_used = out.samples_used;
    result.terminated_by = to_string(out.termination);
    if (!tracker.empty()) {
      result.k_best = tracker.index();
      result.feas_err_best = tracker.feas();
      result.kkt_err_best = tracker.kkt();
    }
  } catch (const std::exception& e) {
    result.terminated_by = std::string("error: ") + e.what();
  }
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace

std::vector<RunResult> run_experiment(const ExperimentConfig& config) {
  config.validate();  // parameter errors surface per cell, in terminated_by

  std::vector<Cell> cells;
  for (const std::string& name : config.resolved_problems())
    for (double eps : config.resolved_eps())
      for (int s = 0; s < config.seeds; ++s)
        cells.push_back({name, eps, config.seed_base + static_cast<std::uint64_t>(s)});

  std::vector<RunResult> results(cells.size());
  const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(cells.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) results[i] = run_cell(config, cells[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
          results[i] = run_cell(config, cells[i]);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  return results;
}

namespace {

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char ch : field) {
    quoted += ch;
    if (ch == '"') quoted += '"';
  }
  quoted += '"';
  return quoted;
}

std::string num(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<RunResult>& results, bool timing) {
  os << "problem,seed,eps_g,k_best,feas_err_best,kkt_err_best,iterations,samples_used,"
        "terminated_by,wall_time_s\n";
  for (const RunResult& r : results) {
    os << csv_quote(r.problem) << ',' << r.seed << ',' << num(r.eps_g, "%g") << ',' << r.k_best
       << ',' << num(r.feas_err_best) << ',' << num(r.kkt_err_best) << ',' << r.iterations << ','
       << r.samples_used << ',' << csv_quote(r.terminated_by) << ','
       << num(timing ? r.wall_time : 0.0, "%.3f") << '\n';
  }
}

void quartiles(std::vector<double> values, double& min, double& q1, double& median, double& q3,
               double& max) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  auto med = [&](std::size_t lo, std::size_t hi) {  // inclusive range
    const std::size_t len = hi - lo + 1;
    const std::size_t mid = lo + len / 2;
    return len % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  };
  min = values.front();
  max = values.back();
  median = med(0, n - 1);
  if (n == 1) {
    q1 = q3 = values[0];
    return;
  }
  // inclusive convention: odd-length samples include the median in each half
  const std::size_t lower_hi = (n % 2 == 1) ? n / 2 : n / 2 - 1;
  const std::size_t upper_lo = n / 2;
  q1 = med(0, lower_hi);
  q3 = med(upper_lo, n - 1);
}

std::vector<QuartileRow> summarize(const std::vector<RunResult>& results) {
  if (results.empty()) throw ConfigError("summarize: no results");
  // preserve first-appearance order of (problem, eps_g) groups
  std::vector<std::pair<std::string, double>> groups;
  for (const RunResult& r : results) {
    std::pair<std::string, double> key{r.problem, r.eps_g};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  std::vector<QuartileRow> rows;
  for (const auto& [problem, eps] : groups) {
    for (const char* metric : {"feas_err_best", "kkt_err_best"}) {
      QuartileRow row;
      row.problem = problem;
      row.eps_g = eps;
      row.metric = metric;
      std::vector<double> values;
      for (const RunResult& r : results) {
        if (r.problem != problem || r.eps_g != eps) continue;
        const double v = std::string(metric) == "feas_err_best" ? r.feas_err_best : r.kkt_err_best;
        if (std::isfinite(v))
          values.push_back(v);
        else
          ++row.failures;
      }
      row.count = static_cast<int>(values.size());
      if (values.empty()) {
        row.min = row.q1 = row.median = row.q3 = row.max = std::numeric_limits<double>::quiet_NaN();
      } else {
        quartiles(values, row.min, row.q1, row.median, row.q3, row.max);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_summary(std::ostream& os, const std::vector<QuartileRow>& rows) {
  os << "# quartiles use the inclusive-median convention\n";
  os << "problem,eps_g,metric,min,q1,median,q3,max,count,failures\n";
  for (const QuartileRow& r : rows) {
    os << csv_quote(r.problem) << ',' << num(r.eps_g, "%g") << ',' << r.metric << ',' << num(r.min)
       << ',' << num(r.q1) << ',' << num(r.median) << ',' << num(r.q3) << ',' << num(r.max) << ','
       << r.count << ',' << r.failures << '\n';
  }
}

namespace {

std::uint64_t env_seed_base() {
  const char* env = std::getenv("SSQP_SEED");
  if (!env) return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw ConfigError("SSQP_SEED must be an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

AlgoParams load_params(const std::string& path, const AlgoParams& base) {
  if (path.empty()) return base;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open params file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return params_from_json(buf.str(), base);
}

StepPolicy parse_policy(const std::string& s) {
  if (s == "grid") return StepPolicy::GridGeometric;
  if (s == "max") return StepPolicy::MaxOfInterval;
  if (s == "min") return StepPolicy::MinOfInterval;
  throw ConfigError("step policy must be one of grid|max|min");
}

int cmd_list() {
  for (const std::string& name : problem_names()) std::cout << name << '\n';
  return 0;
}

struct RunArgs {
  std::string problems = "all";
  std::vector<double> eps;
  int seeds = 5;
  long budget = 10000;
  bool deterministic = false;
  int jobs = 1;
  std::string out_path;
  std::string params_path;
  std::string step_policy;
  bool timing = false;
};

int cmd_run(const RunArgs& args) {
  ExperimentConfig config;
  std::stringstream names(args.problems);
  std::string token;
  config.problems.clear();
  while (std::getline(names, token, ',')) {
    if (!token.empty()) config.problems.push_back(token);
  }
  if (!args.eps.empty()) config.eps_g = args.eps;
  config.seeds = args.seeds;
  config.budget = args.budget;
  config.deterministic = args.deterministic;
  config.jobs = args.jobs;
  config.seed_base = env_seed_base();
  config.params = load_params(args.params_path, AlgoParams{});
  if (!args.step_policy.empty()) config.params.step_policy = parse_policy(args.step_policy);

  std::vector<RunResult> results = run_experiment(config);

  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path);
    if (!out) throw ConfigError("cannot open output file '" + args.out_path + "'");
    write_csv(out, results, args.timing);
  } else {
    write_csv(std::cout, results, args.timing);
  }
  write_summary(std::cout, summarize(results));

  const bool failures = std::any_of(results.begin(), results.end(), [](const RunResult& r) {
    return r.terminated_by.rfind("error", 0) == 0;
  });
  return failures ? 2 : 0;
}

struct SolveArgs {
  std::string problem;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double eps = 1e-2;
  long budget = 10000;
  bool deterministic = false;
  std::string trace_path;
  std::string params_path;
  std::string step_policy;
};

int cmd_solve(const SolveArgs& args) {
  const NlpProblem* problem = find_problem(args.problem);
  if (!problem) throw ConfigError("unknown problem '" + args.problem + "'");
  AlgoParams params = load_params(args.params_path, AlgoParams{});
  if (!args.step_policy.empty()) params.step_policy = parse_policy(args.step_policy);
  params.max_gradient_samples = args.budget;
  params.deterministic = args.deterministic;
  params.compute_d_true = true;
  if (args.deterministic) params.early_stop = true;

  const std::uint64_t seed = args.seed_set ? args.seed : env_seed_base();
  const double eps = args.deterministic ? 0.0 : args.eps;
  GradientOracle oracle(eps, seed);

  std::ofstream trace_file;
  std::ostream* trace_os = nullptr;
  if (!args.trace_path.empty()) {
    trace_file.open(args.trace_path);
    if (!trace_file) throw ConfigError("cannot open trace file '" + args.trace_path + "'");
    trace_os = &trace_file;
    RunMeta meta{problem->name, seed, eps, problem->n, problem->m, params};
    write_trace_meta(*trace_os, meta);
  }

  BestIterateTracker tracker;
  auto observer = [&](const IterationRecord& rec) {
    if (trace_os) write_trace_record(*trace_os, rec);
    if (rec.status == RecordStatus::Step && rec.kkt_err_true)
      tracker.add(rec.k, rec.c_inf, *rec.kkt_err_true);
  };
  RunOutput out = run(*problem, oracle, params, observer, /*keep_trajectory=*/false);
  if (trace_os) write_trace_end(*trace_os, out.termination, out.iterations, out.samples_used);

  std::cout << "problem: " << problem->name << "\n"
            << "termination: " << to_string(out.termination) << "\n"
            << "iterations: " << out.iterations << "\n"
            << "samples_used: " << out.samples_used << "\n"
            << "final_tau: " << num(out.final_tau) << "\n";
  if (!tracker.empty()) {
    std::cout << "k_best: " << tracker.index() << "\n"
              << "feas_err_best: " << num(tracker.feas()) << "\n"
              << "kkt_err_best: " << num(tracker.kkt()) << "\n";
  }
  return 0;
}

int cmd_check(const std::string& trace_path) {
  Trace trace = read_trace_file(trace_path);
  long checked = 0;
  std::vector<Violation> violations = check_trace(trace, &checked);
  std::cout << "records checked: " << checked << "\n";
  if (violations.empty()) {
    std::cout << "no invariant violations\n";
    return 0;
  }
  for (const Violation& v : violations)
    std::cerr << "violation at k=" << v.k << " [" << v.invariant << "] " << v.detail << "\n";
  return 3;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"stochastic SQP benchmark driver"};
  app.require_subcommand(1);

  auto* list_cmd = app.add_subcommand("list", "print the problem registry");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run an experiment sweep");
  run_cmd->add_option("--problems", run_args.problems, "comma-separated names or 'all'");
  run_cmd->add_option("--eps-g", run_args.eps, "noise levels");
  run_cmd->add_option("--seeds", run_args.seeds, "seeds per cell");
  run_cmd->add_option("--budget", run_args.budget, "gradient samples per run");
  run_cmd->add_flag("--deterministic", run_args.deterministic, "true-gradient mode");
  run_cmd->add_option("--jobs", run_args.jobs, "parallel workers");
  run_cmd->add_option("--out", run_args.out_path, "CSV output path");
  run_cmd->add_option("--params", run_args.params_path, "JSON parameter overrides");
  run_cmd->add_option("--step-policy", run_args.step_policy, "grid|max|min");
  run_cmd->add_flag("--timing", run_args.timing, "emit measured wall times");

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "solve one problem with a trace");
  solve_cmd->add_option("--problem", solve_args.problem, "problem name")->required();
  auto* seed_opt = solve_cmd->add_option("--seed", solve_args.seed, "oracle seed");
  solve_cmd->add_option("--eps-g", solve_args.eps, "noise level");
  solve_cmd->add_option("--budget", solve_args.budget, "gradient samples");
  solve_cmd->add_flag("--deterministic", solve_args.deterministic, "true-gradient mode");
  solve_cmd->add_option("--trace", solve_args.trace_path, "JSONL trace output");
  solve_cmd->add_option("--params", solve_args.params_path, "JSON parameter overrides");
  solve_cmd->add_option("--step-policy", solve_args.step_policy, "grid|max|min");

  std::string check_path;
  auto* check_cmd = app.add_subcommand("check", "verify per-iteration invariants of a trace");
  check_cmd->add_option("--trace", check_path, "JSONL trace input")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (list_cmd->parsed()) return cmd_list();
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (solve_cmd->parsed()) {
      solve_args.seed_set = seed_opt->count() > 0;
      return cmd_solve(solve_args);
    }
    if (check_cmd->parsed()) return cmd_check(check_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace ssqp
