#include "ssqp/trace.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace ssqp {

using nlohmann::json;

namespace {

json encode_scalar(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // json has no inf; null decodes back to +inf
}

double decode_scalar(const json& j) {
  if (j.is_null()) return kInf;
  return j.get<double>();
}

json encode_vector(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector decode_vector(const json& a) {
  Vector v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
  return v;
}

StepPolicy policy_from_string(const std::string& s) {
  if (s == "grid") return StepPolicy::GridGeometric;
  if (s == "max") return StepPolicy::MaxOfInterval;
  if (s == "min") return StepPolicy::MinOfInterval;
  throw ConfigError("unknown step policy '" + s + "'");
}

BetaSchedule schedule_from_string(const std::string& s) {
  if (s == "constant") return BetaSchedule::Constant;
  if (s == "diminishing") return BetaSchedule::Diminishing;
  throw ConfigError("unknown beta schedule '" + s + "'");
}

json params_to_json_obj(const AlgoParams& p) {
  json j;
  j["sigma"] = p.sigma;
  j["eta"] = p.eta;
  j["eps_tau"] = p.eps_tau;
  j["eps_xi"] = p.eps_xi;
  j["tau0"] = p.tau0;
  j["xi0"] = p.xi0;
  j["theta"] = p.theta;
  j["beta"] = p.beta;
  j["beta_schedule"] = to_string(p.beta_schedule);
  j["beta_restart"] = p.beta_restart;
  j["anneal_noise"] = p.anneal_noise;
  j["L"] = p.L;
  j["Gamma"] = p.Gamma;
  j["zeta"] = p.zeta;
  j["kappa_H"] = p.kappa_H;
  j["h_scale"] = p.h_scale;
  j["max_gradient_samples"] = p.max_gradient_samples;
  j["max_iterations"] = p.max_iterations;
  j["step_policy"] = to_string(p.step_policy);
  j["grid_base"] = p.grid_base;
  j["mu_floor"] = p.mu_floor;
  j["mu_coef"] = p.mu_coef;
  j["estimate_lipschitz"] = p.estimate_lipschitz;
  j["lipschitz_interval"] = p.lipschitz_interval;
  j["lipschitz_samples"] = p.lipschitz_samples;
  j["lipschitz_radius_coef"] = p.lipschitz_radius_coef;
  j["lipschitz_floor"] = p.lipschitz_floor;
  j["count_estimation_samples"] = p.count_estimation_samples;
  j["compute_d_true"] = p.compute_d_true;
  j["deterministic"] = p.deterministic;
  j["early_stop"] = p.early_stop;
  j["early_stop_tol"] = p.early_stop_tol;
  j["qp_tol"] = p.qp_tol;
  j["feas_tol"] = p.feas_tol;
  j["step_tol"] = p.step_tol;
  j["d_zero_tol"] = p.d_zero_tol;
  return j;
}

AlgoParams params_from_json_obj(const json& j, AlgoParams p) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "sigma") p.sigma = v.get<double>();
    else if (key == "eta") p.eta = v.get<double>();
    else if (key == "eps_tau") p.eps_tau = v.get<double>();
    else if (key == "eps_xi") p.eps_xi = v.get<double>();
    else if (key == "tau0") p.tau0 = v.get<double>();
    else if (key == "xi0") p.xi0 = v.get<double>();
    else if (key == "theta") p.theta = v.get<double>();
    else if (key == "beta") p.beta = v.get<double>();
    else if (key == "beta_schedule") p.beta_schedule = schedule_from_string(v.get<std::string>());
    else if (key == "beta_restart") p.beta_restart = v.get<bool>();
    else if (key == "anneal_noise") p.anneal_noise = v.get<bool>();
    else if (key == "L") p.L = v.get<double>();
    else if (key == "Gamma") p.Gamma = v.get<double>();
    else if (key == "zeta") p.zeta = v.get<double>();
    else if (key == "kappa_H") p.kappa_H = v.get<double>();
    else if (key == "h_scale") p.h_scale = v.get<double>();
    else if (key == "max_gradient_samples") p.max_gradient_samples = v.get<long>();
    else if (key == "max_iterations") p.max_iterations = v.get<long>();
    else if (key == "step_policy") p.step_policy = policy_from_string(v.get<std::string>());
    else if (key == "grid_base") p.grid_base = v.get<double>();
    else if (key == "mu_floor") p.mu_floor = v.get<double>();
    else if (key == "mu_coef") p.mu_coef = v.get<double>();
    else if (key == "estimate_lipschitz") p.estimate_lipschitz = v.get<bool>();
    else if (key == "lipschitz_interval") p.lipschitz_interval = v.get<int>();
    else if (key == "lipschitz_samples") p.lipschitz_samples = v.get<int>();
    else if (key == "lipschitz_radius_coef") p.lipschitz_radius_coef = v.get<double>();
    else if (key == "lipschitz_floor") p.lipschitz_floor = v.get<double>();
    else if (key == "count_estimation_samples") p.count_estimation_samples = v.get<bool>();
    else if (key == "compute_d_true") p.compute_d_true = v.get<bool>();
    else if (key == "deterministic") p.deterministic = v.get<bool>();
    else if (key == "early_stop") p.early_stop = v.get<bool>();
    else if (key == "early_stop_tol") p.early_stop_tol = v.get<double>();
    else if (key == "qp_tol") p.qp_tol = v.get<double>();
    else if (key == "feas_tol") p.feas_tol = v.get<double>();
    else if (key == "step_tol") p.step_tol = v.get<double>();
    else if (key == "d_zero_tol") p.d_zero_tol = v.get<double>();
    else throw ConfigError("unknown parameter key '" + key + "'");
  }
  return p;
}

Termination termination_from_string(const std::string& s) {
  if (s == "infeasible_stationary") return Termination::InfeasibleStationary;
  if (s == "budget_exhausted") return Termination::BudgetExhausted;
  if (s == "max_iterations") return Termination::MaxIterations;
  if (s == "early_stop") return Termination::EarlyStop;
  throw ConfigError("unknown termination '" + s + "'");
}

}  // namespace

void write_trace_meta(std::ostream& os, const RunMeta& meta) {
  json j;
  j["type"] = "meta";
  j["problem"] = meta.problem;
  j["seed"] = meta.seed;
  j["eps_g"] = meta.eps_g;
  j["n"] = meta.n;
  j["m"] = meta.m;
  j["params"] = params_to_json_obj(meta.params);
  os << j.dump() << '\n';
}

std::string record_to_json(const IterationRecord& rec) {
  json j;
  j["type"] = "iter";
  j["k"] = rec.k;
  j["status"] = to_string(rec.status);
  j["x"] = encode_vector(rec.x);
  j["g"] = encode_vector(rec.g);
  j["v"] = encode_vector(rec.v);
  j["d"] = encode_vector(rec.d);
  j["c"] = encode_vector(rec.c);
  j["Jd"] = encode_vector(rec.Jd);
  j["Jv"] = encode_vector(rec.Jv);
  if (rec.grad_true) j["grad_true"] = encode_vector(*rec.grad_true);
  if (rec.d_true) j["d_true"] = encode_vector(*rec.d_true);
  if (rec.y_true) j["y_true"] = encode_vector(*rec.y_true);
  if (rec.z_true) j["z_true"] = encode_vector(*rec.z_true);
  j["f"] = rec.f;
  j["quad_value"] = rec.quad_value;
  j["tau_trial"] = encode_scalar(rec.tau_trial);
  j["tau"] = rec.tau;
  j["xi_trial"] = encode_scalar(rec.xi_trial);
  j["xi"] = rec.xi;
  j["alpha_min"] = rec.alpha_min;
  j["alpha_phi"] = rec.alpha_phi;
  j["alpha_max"] = rec.alpha_max;
  j["alpha"] = rec.alpha;
  j["alpha_min_clamped"] = rec.alpha_min_clamped;
  j["delta_l"] = rec.delta_l;
  if (rec.delta_l_true) j["delta_l_true"] = *rec.delta_l_true;
  if (rec.lin_gain_true) j["lin_gain_true"] = *rec.lin_gain_true;
  j["c_inf"] = rec.c_inf;
  j["merit"] = rec.merit;
  j["beta"] = rec.beta;
  j["mu"] = rec.mu;
  j["L"] = rec.L;
  j["Gamma"] = rec.Gamma;
  if (rec.kkt_err_true) j["kkt_err_true"] = *rec.kkt_err_true;
  j["samples_used"] = rec.samples_used;
  j["rank_deficient"] = rec.rank_deficient;
  return j.dump();
}

void write_trace_record(std::ostream& os, const IterationRecord& rec) {
  os << record_to_json(rec) << '\n';
}

void write_trace_end(std::ostream& os, Termination t, long iterations, long samples_used) {
  json j;
  j["type"] = "end";
  j["termination"] = to_string(t);
  j["iterations"] = iterations;
  j["samples_used"] = samples_used;
  os << j.dump() << '\n';
}

namespace {

IterationRecord record_from_json(const json& j) {
  IterationRecord rec;
  rec.k = j.at("k").get<long>();
  rec.status = j.at("status").get<std::string>() == "step" ? RecordStatus::Step
                                                           : RecordStatus::InfeasibleStationary;
  rec.x = decode_vector(j.at("x"));
  rec.g = decode_vector(j.at("g"));
  rec.v = decode_vector(j.at("v"));
  rec.d = decode_vector(j.at("d"));
  rec.c = decode_vector(j.at("c"));
  rec.Jd = decode_vector(j.at("Jd"));
  rec.Jv = decode_vector(j.at("Jv"));
  if (j.contains("grad_true")) rec.grad_true = decode_vector(j.at("grad_true"));
  if (j.contains("d_true")) rec.d_true = decode_vector(j.at("d_true"));
  if (j.contains("y_true")) rec.y_true = decode_vector(j.at("y_true"));
  if (j.contains("z_true")) rec.z_true = decode_vector(j.at("z_true"));
  rec.f = j.at("f").get<double>();
  rec.quad_value = j.at("quad_value").get<double>();
  rec.tau_trial = decode_scalar(j.at("tau_trial"));
  rec.tau = j.at("tau").get<double>();
  rec.xi_trial = decode_scalar(j.at("xi_trial"));
  rec.xi = j.at("xi").get<double>();
  rec.alpha_min = j.at("alpha_min").get<double>();
  rec.alpha_phi = j.at("alpha_phi").get<double>();
  rec.alpha_max = j.at("alpha_max").get<double>();
  rec.alpha = j.at("alpha").get<double>();
  rec.alpha_min_clamped = j.at("alpha_min_clamped").get<bool>();
  rec.delta_l = j.at("delta_l").get<double>();
  if (j.contains("delta_l_true")) rec.delta_l_true = j.at("delta_l_true").get<double>();
  if (j.contains("lin_gain_true")) rec.lin_gain_true = j.at("lin_gain_true").get<double>();
  rec.c_inf = j.at("c_inf").get<double>();
  rec.merit = j.at("merit").get<double>();
  rec.beta = j.at("beta").get<double>();
  rec.mu = j.at("mu").get<double>();
  rec.L = j.at("L").get<double>();
  rec.Gamma = j.at("Gamma").get<double>();
  if (j.contains("kkt_err_true")) rec.kkt_err_true = j.at("kkt_err_true").get<double>();
  rec.samples_used = j.at("samples_used").get<long>();
  rec.rank_deficient = j.value("rank_deficient", false);
  return rec;
}

}  // namespace

Trace read_trace(std::istream& is) {
  Trace trace;
  std::string line;
  bool have_meta = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "meta") {
      trace.meta.problem = j.at("problem").get<std::string>();
      trace.meta.seed = j.at("seed").get<std::uint64_t>();
      trace.meta.eps_g = j.at("eps_g").get<double>();
      trace.meta.n = j.at("n").get<int>();
      trace.meta.m = j.at("m").get<int>();
      trace.meta.params = params_from_json_obj(j.at("params"), AlgoParams{});
      have_meta = true;
    } else if (type == "iter") {
      trace.records.push_back(record_from_json(j));
    } else if (type == "end") {
      trace.termination = termination_from_string(j.at("termination").get<std::string>());
      trace.iterations = j.at("iterations").get<long>();
      trace.samples_used = j.at("samples_used").get<long>();
    } else {
      throw ConfigError("unknown trace line type '" + type + "'");
    }
  }
  if (!have_meta) throw ConfigError("trace has no meta line");
  return trace;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  return read_trace(in);
}

std::string params_to_json(const AlgoParams& params) { return params_to_json_obj(params).dump(); }

AlgoParams params_from_json(const std::string& text, const AlgoParams& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid params JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("params JSON must be an object");
  return params_from_json_obj(j, base);
}

}  // namespace ssqp
