#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slosim/policy.hpp"
#include "slosim/predictor.hpp"
#include "slosim/report.hpp"
#include "slosim/workload.hpp"

namespace slosim {

// Declarative run description. JSON keys (unknown keys are errors):
//   seed, workload{...} | trace, policy{...} | "name", cost_model{...} | "path",
//   predictor{...}, horizon_s, output{dir, log_decisions}, sweep{qps, policies, jobs}
struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<WorkloadSpec> workload;
  std::optional<std::filesystem::path> trace_path;
  PolicyConfig policy;
  CostModel cost = CostModel::reference();
  PredictorConfig predictor;
  std::optional<double> horizon;
  std::filesystem::path out_dir = "out";
  bool log_decisions = false;
  std::vector<double> sweep_qps;
  std::vector<PolicyKind> sweep_policies;
  int jobs = 1;
};

nlohmann::json load_config_json(const std::filesystem::path& path);

// "a.b.c=value": value is parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& config, std::string_view assignment);

// SLOSIM_SEED, when set, replaces the file's seed; --set overrides still win.
void apply_env_seed(nlohmann::json& config);

RunConfig parse_run_config(const nlohmann::json& j);

// Generated from the workload block (seed derived for "workload"), or loaded.
Trace load_workload(const RunConfig& config);

RunSetup make_setup(const RunConfig& config);

std::vector<NamedPolicy> sweep_policies(const RunConfig& config);

}  // namespace slosim
