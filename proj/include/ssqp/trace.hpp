#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ssqp/sqp.hpp"

namespace ssqp {

struct RunMeta {
  std::string problem;
  std::uint64_t seed = 0;
  double eps_g = 0;
  int n = 0;
  int m = 0;
  AlgoParams params;
};

struct Trace {
  RunMeta meta;
  std::vector<IterationRecord> records;
  std::optional<Termination> termination;
  long iterations = 0;
  long samples_used = 0;
};

// JSON Lines: a meta object, one object per iteration, and an end marker.
// Non-finite scalars are encoded as null and read back as +inf.
void write_trace_meta(std::ostream& os, const RunMeta& meta);
void write_trace_record(std::ostream& os, const IterationRecord& rec);
void write_trace_end(std::ostream& os, Termination t, long iterations, long samples_used);

std::string record_to_json(const IterationRecord& rec);

Trace read_trace(std::istream& is);
Trace read_trace_file(const std::string& path);

// Flat JSON object mirroring the AlgoParams field names; unknown keys are
// rejected with ConfigError.
std::string params_to_json(const AlgoParams& params);
AlgoParams params_from_json(const std::string& text, const AlgoParams& base = AlgoParams{});

}  // namespace ssqp
