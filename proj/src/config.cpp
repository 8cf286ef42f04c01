#include "slosim/config.hpp"

#include <cstdlib>
#include <set>

#include "slosim/util.hpp"

namespace slosim {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, std::string_view where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get(const json& j, const char* key, std::string_view where, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + ": wrong type");
  }
}

LengthDist parse_dist(const json& j, std::string_view where) {
  if (!j.is_object() || !j.contains("dist")) {
    throw ConfigError(std::string(where) + ": expected {\"dist\": ...}");
  }
  const auto dist = get<std::string>(j, "dist", where, "");
  try {
    if (dist == "lognormal") {
      check_keys(j, where, {"dist", "mu", "sigma"});
      return LengthDist::lognormal(get(j, "mu", where, 5.0), get(j, "sigma", where, 1.0));
    }
    if (dist == "uniform") {
      check_keys(j, where, {"dist", "lo", "hi"});
      return LengthDist::uniform(get(j, "lo", where, 1), get(j, "hi", where, 1));
    }
    if (dist == "empirical") {
      check_keys(j, where, {"dist", "values"});
      return LengthDist::empirical(get(j, "values", where, std::vector<int>{}));
    }
    if (dist == "empirical_file") {
      check_keys(j, where, {"dist", "path"});
      return LengthDist::empirical_file(get<std::string>(j, "path", where, ""));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
  throw ConfigError(std::string(where) + ": unknown dist '" + dist + "'");
}

WorkloadSpec parse_workload(const json& j) {
  constexpr std::string_view w = "workload";
  check_keys(j, w,
             {"qps", "duration_s", "prompt_len", "output_len", "max_prompt_len", "max_output_len",
              "category_weights", "slo_table"});
  WorkloadSpec s;
  s.qps = get(j, "qps", w, s.qps);
  s.duration = get(j, "duration_s", w, s.duration);
  if (j.contains("prompt_len")) s.prompt_len = parse_dist(j.at("prompt_len"), "workload.prompt_len");
  if (j.contains("output_len")) s.output_len = parse_dist(j.at("output_len"), "workload.output_len");
  s.max_prompt_len = get(j, "max_prompt_len", w, s.max_prompt_len);
  s.max_output_len = get(j, "max_output_len", w, s.max_output_len);
  if (j.contains("category_weights")) {
    const auto weights = get(j, "category_weights", w, std::vector<double>{});
    if (weights.size() != s.category_weights.size()) {
      throw ConfigError("workload.category_weights: expected 6 weights");
    }
    std::copy(weights.begin(), weights.end(), s.category_weights.begin());
  }
  if (j.contains("slo_table")) {
    s.slo_table = SloCategoryTable::by_name(get<std::string>(j, "slo_table", w, ""));
  }
  try {
    validate(s);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return s;
}

AdmissionMin admission_min_from_string(const std::string& text) {
  if (text == "r_prime") return AdmissionMin::RPrime;
  if (text == "r_only") return AdmissionMin::ROnly;
  throw ConfigError("policy.admission_min: expected r_prime or r_only, got '" + text + "'");
}

PolicyConfig parse_policy(const json& j) {
  PolicyConfig p;
  if (j.is_string()) {
    p.kind = policy_kind_from_string(j.get<std::string>());
    return p;
  }
  constexpr std::string_view w = "policy";
  check_keys(j, w,
             {"name", "max_batch_size", "prefill_priority", "ttft_guard", "tpot_guard",
              "admission_min"});
  p.kind = policy_kind_from_string(get<std::string>(j, "name", w, "scorpio"));
  p.max_batch_size = get(j, "max_batch_size", w, p.max_batch_size);
  if (p.max_batch_size < 1) throw ConfigError("policy.max_batch_size must be >= 1");
  p.prefill_priority = get(j, "prefill_priority", w, p.prefill_priority);
  p.scorpio.ttft_guard = get(j, "ttft_guard", w, p.scorpio.ttft_guard);
  p.scorpio.tpot_guard = get(j, "tpot_guard", w, p.scorpio.tpot_guard);
  p.scorpio.admission_min =
      admission_min_from_string(get<std::string>(j, "admission_min", w, "r_prime"));
  return p;
}

PredictorConfig parse_predictor(const json& j) {
  constexpr std::string_view w = "predictor";
  check_keys(j, w, {"mode", "strategy", "num_buckets", "max_len", "error_prob", "error_spread"});
  PredictorConfig p;
  p.mode = predictor_mode_from_string(get<std::string>(j, "mode", w, "noisy_bucket"));
  p.strategy = bucket_strategy_from_string(get<std::string>(j, "strategy", w, "equal_width"));
  p.num_buckets = get(j, "num_buckets", w, p.num_buckets);
  p.max_len = get(j, "max_len", w, p.max_len);
  p.error_prob = get(j, "error_prob", w, p.error_prob);
  p.error_spread = get(j, "error_spread", w, p.error_spread);
  validate(p);
  return p;
}

}  // namespace

json load_config_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("--set: expected key=value, got '" + std::string(assignment) + "'");
  }
  const auto path = split(assignment.substr(0, eq), '.');
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &config;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (path[i].empty()) throw ConfigError("--set: empty key segment");
    if (node->contains(path[i]) && !(*node)[path[i]].is_object()) {
      // A shorthand string (e.g. "policy": "greedy") widens into an object.
      if (path[i] == "policy" && (*node)[path[i]].is_string()) {
        (*node)[path[i]] = json{{"name", (*node)[path[i]]}};
      } else {
        throw ConfigError("--set: '" + path[i] + "' is not an object");
      }
    }
    node = &(*node)[path[i]];
  }
  (*node)[path.back()] = value;
}

void apply_env_seed(json& config) {
  const char* env = std::getenv("SLOSIM_SEED");
  if (env == nullptr || *env == '\0') return;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(env, &used);
    if (used != std::string_view(env).size()) throw std::invalid_argument("trailing characters");
    config["seed"] = seed;
  } catch (const std::exception&) {
    throw ConfigError(std::string("SLOSIM_SEED: not an unsigned integer: '") + env + "'");
  }
}

RunConfig parse_run_config(const json& j) {
  check_keys(j, "config",
             {"seed", "workload", "trace", "policy", "cost_model", "predictor", "horizon_s",
              "output", "sweep"});
  RunConfig c;
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      throw ConfigError("config.seed: expected a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("workload") && j.contains("trace")) {
    throw ConfigError("config: give either workload or trace, not both");
  }
  if (j.contains("workload")) c.workload = parse_workload(j.at("workload"));
  if (j.contains("trace")) c.trace_path = get<std::string>(j, "trace", "config", "");
  if (j.contains("policy")) c.policy = parse_policy(j.at("policy"));
  if (j.contains("cost_model")) {
    const auto& cm = j.at("cost_model");
    c.cost = cm.is_string() ? load_cost_model(cm.get<std::string>()) : cost_model_from_json(cm);
  }
  if (j.contains("predictor")) c.predictor = parse_predictor(j.at("predictor"));
  if (j.contains("horizon_s") && !j.at("horizon_s").is_null()) {
    c.horizon = get(j, "horizon_s", "config", 0.0);
    if (!(*c.horizon > 0.0)) throw ConfigError("config.horizon_s must be > 0");
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, "output", {"dir", "log_decisions"});
    c.out_dir = get<std::string>(o, "dir", "output", c.out_dir.string());
    c.log_decisions = get(o, "log_decisions", "output", c.log_decisions);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, "sweep", {"qps", "policies", "jobs"});
    c.sweep_qps = get(s, "qps", "sweep", std::vector<double>{});
    for (double q : c.sweep_qps) {
      if (!(q > 0.0)) throw ConfigError("sweep.qps: values must be > 0");
    }
    for (const auto& name : get(s, "policies", "sweep", std::vector<std::string>{})) {
      c.sweep_policies.push_back(policy_kind_from_string(name));
    }
    c.jobs = get(s, "jobs", "sweep", c.jobs);
    if (c.jobs < 1) throw ConfigError("sweep.jobs must be >= 1");
  }
  return c;
}

Trace load_workload(const RunConfig& config) {
  if (config.trace_path) return load_trace(*config.trace_path);
  if (!config.workload) throw ConfigError("config: needs a workload block or a trace path");
  WorkloadSpec spec = *config.workload;
  spec.seed = derive_seed(config.seed, "workload");
  return generate(spec);
}

RunSetup make_setup(const RunConfig& config) {
  RunSetup s;
  s.cost = config.cost;
  s.predictor = config.predictor;
  s.sim.horizon = config.horizon;
  s.sim.log_decisions = config.log_decisions;
  s.seed = config.seed;
  return s;
}

std::vector<NamedPolicy> sweep_policies(const RunConfig& config) {
  std::vector<NamedPolicy> out;
  auto kinds = config.sweep_policies;
  if (kinds.empty()) kinds = {PolicyKind::Scorpio, PolicyKind::Greedy};
  for (auto k : kinds) {
    PolicyConfig p = config.policy;
    p.kind = k;
    out.push_back({std::string(to_string(k)), p});
  }
  return out;
}

}  // namespace slosim
