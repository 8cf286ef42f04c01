#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slosim/costmodel.hpp"
#include "slosim/predictor.hpp"
#include "slosim/scheduler.hpp"
#include "slosim/workload.hpp"

namespace slosim {

struct SimConfig {
  std::optional<double> horizon;  // seconds; nullopt runs until the trace drains
  bool log_decisions = false;     // keep per-step StepRecords
};

void validate(const SimConfig& config);

struct StepRecord {
  std::size_t step = 0;
  double start = 0.0;
  double duration = 0.0;
  std::vector<RequestId> admitted;
  std::vector<double> admission_estimates;
  std::vector<Rejection> rejected;
  std::vector<RequestId> batch;
  double vbs = 0.0;
  double min_tpot_slo = 0.0;
};

struct EventLog {
  std::vector<StepRecord> steps;  // empty unless log_decisions
  std::size_t step_count = 0;
  std::vector<std::vector<double>> token_times;  // indexed like the trace
  // Wall-clock seconds: inside plan_step, and for the whole engine loop.
  double policy_wall_s = 0.0;
  double engine_wall_s = 0.0;
};

struct SimResult {
  std::vector<RequestOutcome> outcomes;  // trace order
  EventLog log;
  double end_time = 0.0;  // simulated seconds when the last step finished
};

// Each step: move arrivals into the queue, plan, then charge
//   sum(prefill of admitted) + itl(|batch|, mean(prompt + generated over batch))
// An admitted request emits its first token at step end, every batch member one
// more. Steps that start before the horizon run to completion.
SimResult run(const Trace& trace, Policy& policy, const LengthPredictor& predictor,
              const CostModel& cost, const SimConfig& config);

struct Overhead {
  double total_s = 0.0;     // simulated serving time
  double schedule_s = 0.0;  // engine loop wall time
  double policy_s = 0.0;    // wall time inside the policy
  double overhead_pct = 0.0;
};

// overhead_pct = policy_s / total_s * 100.
Overhead measure_overhead(const SimResult& result);

// One JSON object per step.
std::string format_decision_log(const EventLog& log);

// Header: id,status,ttft_s,tpot_ms,compliant,category
std::string format_outcomes_csv(const std::vector<RequestOutcome>& outcomes);

}  // namespace slosim
