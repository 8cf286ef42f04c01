#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "slosim/engine.hpp"
#include "slosim/policy.hpp"
#include "slosim/predictor.hpp"
#include "slosim/workload.hpp"

namespace slosim {

struct Percentiles {
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
};

// Nearest-rank: the ceil(p/100 * n)-th smallest value. Throws on empty input.
double percentile(std::span<const double> values, double p);
Percentiles percentiles(std::span<const double> values);

struct CategoryStats {
  std::size_t total = 0;
  std::size_t compliant = 0;
  double adherence = 0.0;
};

struct RunReport {
  std::size_t total = 0;
  std::size_t completed = 0;
  std::size_t compliant = 0;
  std::size_t rejected_ttft = 0;
  std::size_t rejected_admission = 0;
  std::size_t unfinished = 0;
  double horizon = 0.0;
  double goodput = 0.0;
  double adherence = 0.0;
  std::map<int, CategoryStats> per_category;
  std::optional<Percentiles> ttft;  // seconds, requests with a first token
  std::optional<Percentiles> tpot;  // seconds, completed requests
  // Completed requests over their own SLO; filled only when the trace is known.
  std::size_t ttft_violations = 0;
  std::size_t tpot_violations = 0;
  // (time, compliant completions so far), one point per compliant completion,
  // bracketed by (0, 0) and (horizon, final count).
  std::vector<std::pair<double, std::size_t>> cumulative;
};

RunReport summarize(std::span<const RequestOutcome> outcomes, double horizon);
RunReport summarize(std::span<const RequestOutcome> outcomes, double horizon,
                    std::span<const Request> trace);

nlohmann::ordered_json to_json(const RunReport& report);
std::string format_cumulative_csv(const RunReport& report);
std::string format_table(const RunReport& report);

// Everything a run needs besides the trace and the policy.
struct RunSetup {
  CostModel cost = CostModel::reference();
  PredictorConfig predictor;
  SimConfig sim;
  std::uint64_t seed = 0;
};

struct RunOutput {
  SimResult result;
  RunReport report;
};

// Goodput horizon: sim.horizon when set, otherwise the makespan.
RunOutput run_policy(const Trace& trace, const PolicyConfig& policy, const RunSetup& setup);

struct NamedPolicy {
  std::string name;
  PolicyConfig config;
};

struct SweepCell {
  double qps = 0.0;
  std::string policy;
  RunReport report;
};

struct GoodputRatio {
  double qps = 0.0;
  std::string numerator;
  std::string denominator;
  double ratio = 0.0;
};

struct SweepReport {
  std::vector<double> qps;
  std::vector<std::string> policies;
  std::vector<SweepCell> cells;  // qps-major, policies in the given order
  std::vector<GoodputRatio> ratios;  // every ordered pair whose denominator is > 0

  const SweepCell& cell(double qps, std::string_view policy) const;
};

// A synthetic spec is regenerated per qps under one workload seed, so every
// policy at a qps sees the same requests and a 1x1 sweep matches a single run.
// A trace is time-compressed to each qps instead. Cells run on up to `jobs`
// threads.
using SweepInput = std::variant<WorkloadSpec, Trace>;
Trace sweep_trace(const SweepInput& input, double qps, std::uint64_t seed);
SweepReport sweep(const SweepInput& input, std::span<const double> qps_list,
                  std::span<const NamedPolicy> policies, const RunSetup& setup, int jobs = 1);

nlohmann::ordered_json to_json(const SweepReport& report);
std::string format_goodput_csv(const SweepReport& report);

struct AblationCell {
  std::string name;
  bool ttft_guard = false;
  bool tpot_guard = false;
  RunReport report;
};

// SCORPIO with {neither, TTFT only, TPOT only, both} guards on one trace.
std::vector<AblationCell> ablation(const Trace& trace, const PolicyConfig& base,
                                   const RunSetup& setup, int jobs = 1);
std::string format_ablation_csv(std::span<const AblationCell> cells);

}  // namespace slosim
