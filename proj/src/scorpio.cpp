#include "slosim/scorpio.hpp"

#include <algorithm>
#include <stdexcept>

namespace slosim {

double trp(double tpot_slo, double min_slo) {
  if (!(tpot_slo > 0.0) || !(min_slo > 0.0)) {
    throw std::invalid_argument("trp: SLOs must be positive");
  }
  return min_slo / tpot_slo;
}

double vbs(std::span<const RunningEntry> running, double min_slo) {
  double total = 0.0;
  for (const auto& e : running) total += trp(e.request.tpot_slo, min_slo);
  return total;
}

double average_length(std::span<const RunningEntry> running) {
  if (running.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : running) total += e.request.prompt_len + e.tokens_generated;
  return total / static_cast<double>(running.size());
}

RunningAggregate RunningAggregate::of(std::span<const RunningEntry> running) {
  RunningAggregate agg;
  for (const auto& e : running) agg.add(e.request, e.tokens_generated);
  return agg;
}

void RunningAggregate::add(const Request& request, int tokens_generated) {
  ++count;
  inverse_slo_sum += 1.0 / request.tpot_slo;
  length_sum += request.prompt_len + tokens_generated;
  min_slo = std::min(min_slo, request.tpot_slo);
}

AdmissionProbe probe_admission(const RunningAggregate& running, const WaitingEntry& candidate,
                               const ItlParams& params, AdmissionMin mode) {
  const Request& r = candidate.request;
  const double new_min = std::min(running.min_slo, r.tpot_slo);
  AdmissionProbe probe;
  probe.vbs = new_min * (running.inverse_slo_sum + 1.0 / r.tpot_slo);
  probe.avg_len = (running.length_sum + r.prompt_len) / static_cast<double>(running.count + 1);
  probe.estimate =
      estimated_tpot(params, probe.vbs, probe.avg_len, std::max(1, candidate.predicted_len));
  if (mode == AdmissionMin::RPrime || running.count == 0) {
    probe.bound = new_min;
  } else {
    probe.bound = running.min_slo;
  }
  return probe;
}

bool admit(SchedulerState& state, const WaitingEntry& candidate, const ItlParams& params,
           AdmissionMin mode) {
  const auto probe =
      probe_admission(RunningAggregate::of(state.running), candidate, params, mode);
  if (!probe.feasible()) return false;
  state.running.push_back({candidate.request, 0, candidate.predicted_len, 0.0, true});
  return true;
}

std::vector<RequestId> select_batch(SchedulerState& state) {
  std::vector<RequestId> batch;
  const double min_slo = min_tpot_slo(state.running);
  for (auto& e : state.running) {
    if (e.prefilling) continue;
    e.credit += trp(e.request.tpot_slo, min_slo);
    if (e.credit >= 1.0 - kCreditEpsilon) {
      batch.push_back(e.request.id);
      e.credit = std::max(0.0, e.credit - 1.0);
    }
  }
  return batch;
}

void sort_ldf(std::vector<WaitingEntry>& waiting) {
  std::sort(waiting.begin(), waiting.end(), [](const WaitingEntry& a, const WaitingEntry& b) {
    const Request& x = a.request;
    const Request& y = b.request;
    if (x.ttft_deadline() != y.ttft_deadline()) return x.ttft_deadline() < y.ttft_deadline();
    if (x.arrival_time != y.arrival_time) return x.arrival_time < y.arrival_time;
    return x.id < y.id;
  });
}

std::vector<Rejection> ttft_guard(SchedulerState& state, const PrefillParams& params) {
  sort_ldf(state.waiting);
  return reject_unattainable_ttft(state, params);
}

ScorpioPolicy::ScorpioPolicy(ScorpioConfig config, CostModel cost)
    : config_(config), cost_(cost) {
  if (config_.max_batch_size < 1) {
    throw std::invalid_argument("scorpio: max_batch_size must be >= 1");
  }
}

StepPlan ScorpioPolicy::plan_step(SchedulerState& state) {
  StepPlan plan;
  if (config_.ttft_guard) plan.rejected = ttft_guard(state, cost_.prefill);

  const auto capacity = static_cast<std::size_t>(config_.max_batch_size);
  std::vector<WaitingEntry> kept;
  kept.reserve(state.waiting.size());
  if (config_.tpot_guard) {
    RunningAggregate agg = RunningAggregate::of(state.running);
    for (auto& w : state.waiting) {
      if (state.running.size() >= capacity) {
        kept.push_back(std::move(w));
        continue;
      }
      const auto probe = probe_admission(agg, w, cost_.itl, config_.admission_min);
      if (probe.feasible()) {
        agg.add(w.request, 0);
        plan.admitted.push_back(w.request.id);
        plan.admission_estimates.push_back(probe.estimate);
        state.running.push_back({w.request, 0, w.predicted_len, 0.0, true});
        continue;
      }
      // Infeasible even on an idle engine: waiting can never help.
      const auto solo = probe_admission(RunningAggregate{}, w, cost_.itl, config_.admission_min);
      if (!solo.feasible()) {
        plan.rejected.push_back({w.request.id, RejectReason::Admission, solo.estimate});
      } else {
        kept.push_back(std::move(w));
      }
    }
  } else {
    for (auto& w : state.waiting) {
      if (state.running.size() < capacity) {
        plan.admitted.push_back(w.request.id);
        state.running.push_back({w.request, 0, w.predicted_len, 0.0, true});
      } else {
        kept.push_back(std::move(w));
      }
    }
  }
  state.waiting = std::move(kept);

  plan.min_tpot_slo = min_tpot_slo(state.running);
  if (!state.running.empty()) plan.vbs = vbs(state.running, plan.min_tpot_slo);

  if (config_.tpot_guard) {
    plan.decode_batch = select_batch(state);
  } else {
    for (const auto& e : state.running) {
      if (!e.prefilling) plan.decode_batch.push_back(e.request.id);
    }
  }
  return plan;
}

}  // namespace slosim
