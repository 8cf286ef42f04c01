#include "slosim/engine.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "slosim/util.hpp"

namespace slosim {

void validate(const SimConfig& config) {
  if (config.horizon && !(*config.horizon > 0.0)) {
    throw std::invalid_argument("sim: horizon must be > 0");
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[noreturn]] void breach(const std::string& what) {
  throw std::logic_error("engine: policy broke an invariant: " + what);
}

}  // namespace

SimResult run(const Trace& trace, Policy& policy, const LengthPredictor& predictor,
              const CostModel& cost, const SimConfig& config) {
  validate(config);
  validate_trace(trace);
  const auto loop_start = Clock::now();

  SimResult result;
  const std::size_t n = trace.size();
  std::unordered_map<RequestId, std::size_t> index;
  index.reserve(n);
  result.outcomes.resize(n);
  result.log.token_times.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!index.emplace(trace[i].id, i).second) {
      throw std::invalid_argument("trace: duplicate request id " + std::to_string(trace[i].id));
    }
    result.outcomes[i].id = trace[i].id;
    result.outcomes[i].category = trace[i].category;
  }

  auto reject = [&](const Rejection& r) {
    auto& o = result.outcomes.at(index.at(r.id));
    o.status = r.reason == RejectReason::Ttft ? RequestStatus::RejectedTtft
                                              : RequestStatus::RejectedAdmission;
  };

  SchedulerState state;
  std::size_t next = 0;
  double now = 0.0;
  std::unordered_map<RequestId, std::size_t> slot;

  while (true) {
    while (next < n && trace[next].arrival_time <= now) {
      state.waiting.push_back({trace[next], std::max(1, predictor.predict(trace[next]))});
      ++next;
    }
    if (state.waiting.empty() && state.running.empty()) {
      if (next == n) break;
      if (config.horizon && trace[next].arrival_time >= *config.horizon) break;
      now = trace[next].arrival_time;
      continue;
    }
    if (config.horizon && now >= *config.horizon) break;

    const std::size_t before = state.waiting.size() + state.running.size();
    state.now = now;
    const auto t0 = Clock::now();
    StepPlan plan = policy.plan_step(state);
    result.log.policy_wall_s += seconds_since(t0);

    for (const auto& r : plan.rejected) reject(r);
    if (state.waiting.size() + state.running.size() + plan.rejected.size() != before) {
      breach("request count not conserved");
    }

    slot.clear();
    std::size_t prefilling = 0;
    for (std::size_t i = 0; i < state.running.size(); ++i) {
      slot[state.running[i].request.id] = i;
      if (state.running[i].prefilling) ++prefilling;
    }
    if (prefilling != plan.admitted.size()) breach("admitted list does not match running set");

    double duration = 0.0;
    for (RequestId id : plan.admitted) {
      auto it = slot.find(id);
      if (it == slot.end() || !state.running[it->second].prefilling) {
        breach("admitted request " + std::to_string(id) + " is not prefilling");
      }
      duration += prefill_time(cost.prefill, state.running[it->second].request.prompt_len);
    }
    std::unordered_set<RequestId> in_batch;
    double len_sum = 0.0;
    for (RequestId id : plan.decode_batch) {
      auto it = slot.find(id);
      if (it == slot.end()) breach("batch member " + std::to_string(id) + " is not running");
      const auto& e = state.running[it->second];
      if (e.prefilling) breach("request " + std::to_string(id) + " both admitted and batched");
      if (!in_batch.insert(id).second) breach("request " + std::to_string(id) + " batched twice");
      len_sum += e.request.prompt_len + e.tokens_generated;
    }
    if (!plan.decode_batch.empty()) {
      const auto b = static_cast<double>(plan.decode_batch.size());
      duration += itl(cost.itl, b, len_sum / b);
    }

    if (!(duration > 0.0)) {
      if (!state.running.empty()) breach("running requests but an empty step");
      if (next < n) {
        if (config.horizon && trace[next].arrival_time >= *config.horizon) break;
        now = trace[next].arrival_time;
        continue;
      }
      break;  // leftovers can never be admitted
    }

    const double end = now + duration;
    if (config.log_decisions) {
      StepRecord rec;
      rec.step = result.log.step_count;
      rec.start = now;
      rec.duration = duration;
      rec.admitted = plan.admitted;
      rec.admission_estimates = plan.admission_estimates;
      rec.rejected = plan.rejected;
      rec.batch = plan.decode_batch;
      rec.vbs = plan.vbs;
      rec.min_tpot_slo = plan.min_tpot_slo;
      result.log.steps.push_back(std::move(rec));
    }
    ++result.log.step_count;

    for (RequestId id : plan.admitted) {
      auto& e = state.running[slot[id]];
      e.prefilling = false;
      e.tokens_generated = 1;
      const std::size_t i = index.at(id);
      result.outcomes[i].first_token_time = end;
      result.log.token_times[i].push_back(end);
    }
    for (RequestId id : plan.decode_batch) {
      auto& e = state.running[slot[id]];
      ++e.tokens_generated;
      result.log.token_times[index.at(id)].push_back(end);
    }

    std::vector<RunningEntry> still;
    still.reserve(state.running.size());
    for (auto& e : state.running) {
      if (e.tokens_generated < e.request.true_output_len) {
        still.push_back(std::move(e));
        continue;
      }
      const std::size_t i = index.at(e.request.id);
      auto& o = result.outcomes[i];
      const auto& times = result.log.token_times[i];
      o.status = RequestStatus::Completed;
      o.completion_time = times.back();
      o.ttft = *o.first_token_time - e.request.arrival_time;
      o.tpot = compute_tpot(*o.first_token_time, times);
      o.slo_compliant = is_compliant(e.request, o);
    }
    state.running = std::move(still);
    now = end;
  }

  result.end_time = now;
  result.log.engine_wall_s = seconds_since(loop_start);
  return result;
}

Overhead measure_overhead(const SimResult& result) {
  Overhead o;
  o.total_s = result.end_time;
  o.schedule_s = result.log.engine_wall_s;
  o.policy_s = result.log.policy_wall_s;
  o.overhead_pct = o.total_s > 0.0 ? o.policy_s / o.total_s * 100.0 : 0.0;
  return o;
}

std::string format_decision_log(const EventLog& log) {
  constexpr double kMs = 1e3;
  std::string out;
  for (const auto& s : log.steps) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["now_s"] = s.start;
    j["duration_s"] = s.duration;
    j["admitted"] = s.admitted;
    auto est = nlohmann::json::array();
    for (double e : s.admission_estimates) est.push_back(e * kMs);
    j["admit_est_ms"] = est;
    auto rej = nlohmann::ordered_json::array();
    for (const auto& r : s.rejected) {
      rej.push_back({{"id", r.id}, {"reason", to_string(r.reason)}, {"estimate_s", r.estimate}});
    }
    j["rejected"] = rej;
    j["batch"] = s.batch;
    j["vbs"] = s.vbs;
    if (std::isfinite(s.min_tpot_slo)) {
      j["min_slo_ms"] = s.min_tpot_slo * kMs;
    } else {
      j["min_slo_ms"] = nullptr;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string format_outcomes_csv(const std::vector<RequestOutcome>& outcomes) {
  std::string out = "id,status,ttft_s,tpot_ms,compliant,category\n";
  for (const auto& o : outcomes) {
    out += std::to_string(o.id);
    out += ',';
    out += to_string(o.status);
    out += ',';
    if (o.ttft) out += format_double(*o.ttft);
    out += ',';
    if (o.tpot) out += format_double(*o.tpot * 1e3);
    out += ',';
    out += o.slo_compliant ? '1' : '0';
    out += ',';
    out += std::to_string(o.category);
    out += '\n';
  }
  return out;
}

}  // namespace slosim
