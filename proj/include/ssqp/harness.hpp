#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssqp/sqp.hpp"

namespace ssqp {

struct ExperimentConfig {
  std::vector<std::string> problems;              // names, or the single entry "all"
  std::vector<double> eps_g = {1e-8, 1e-4, 1e-2, 1e-1};
  int seeds = 5;                                  // replications per (problem, eps_g)
  std::uint64_t seed_base = 0;
  AlgoParams params;
  long budget = 10000;                            // stochastic gradient samples per run
  bool deterministic = false;                     // collapses eps_g to {0}
  int jobs = 1;

  void validate() const;
  std::vector<std::string> resolved_problems() const;
  std::vector<double> resolved_eps() const;
};

struct RunResult {
  std::string problem;
  std::uint64_t seed = 0;
  double eps_g = 0;
  long k_best = 0;  // iteration index, 0 when no iterate qualified
  double feas_err_best = std::numeric_limits<double>::quiet_NaN();
  double kkt_err_best = std::numeric_limits<double>::quiet_NaN();
  long iterations = 0;
  long samples_used = 0;
  std::string terminated_by;
  double wall_time = 0;  // seconds, measured
};

// One result per (problem, eps_g, seed) cell, ordered that way regardless of
// worker scheduling. Cell failures land in terminated_by and never abort the
// sweep.
std::vector<RunResult> run_experiment(const ExperimentConfig& config);

// header: problem,seed,eps_g,k_best,feas_err_best,kkt_err_best,iterations,
//         samples_used,terminated_by,wall_time_s
// RFC 4180 quoting; wall_time_s prints as 0.000 unless timing is requested,
// which keeps rerun output byte-identical.
void write_csv(std::ostream& os, const std::vector<RunResult>& results, bool timing = false);

struct QuartileRow {
  std::string problem;
  double eps_g = 0;
  std::string metric;  // feas_err_best | kkt_err_best
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  int count = 0;
  int failures = 0;
};

std::vector<QuartileRow> summarize(const std::vector<RunResult>& results);
void write_summary(std::ostream& os, const std::vector<QuartileRow>& rows);

// Quartiles of a sample by the inclusive-median convention.
void quartiles(std::vector<double> values, double& min, double& q1, double& median, double& q3,
               double& max);

int cli_main(int argc, char** argv);

}  // namespace ssqp
