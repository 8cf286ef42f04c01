#include "slosim/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace slosim {

void validate(const BaselineConfig& config) {
  if (config.max_batch_size < 1) {
    throw std::invalid_argument("baseline: max_batch_size must be >= 1");
  }
}

namespace {

void sort_fcfs(std::vector<WaitingEntry>& waiting) {
  std::stable_sort(waiting.begin(), waiting.end(), [](const WaitingEntry& a, const WaitingEntry& b) {
    if (a.request.arrival_time != b.request.arrival_time) {
      return a.request.arrival_time < b.request.arrival_time;
    }
    return a.request.id < b.request.id;
  });
}

// Admits from the front of the queue in its current order.
StepPlan admit_and_batch(SchedulerState& state, const BaselineConfig& config) {
  StepPlan plan;
  const auto capacity = static_cast<std::size_t>(config.max_batch_size);
  std::vector<RequestId> decoding;
  for (const auto& e : state.running) decoding.push_back(e.request.id);

  std::size_t taken = 0;
  while (taken < state.waiting.size() && state.running.size() < capacity) {
    const auto& w = state.waiting[taken++];
    plan.admitted.push_back(w.request.id);
    state.running.push_back({w.request, 0, w.predicted_len, 0.0, true});
  }
  state.waiting.erase(state.waiting.begin(),
                      state.waiting.begin() + static_cast<std::ptrdiff_t>(taken));

  if (!(config.prefill_priority && !plan.admitted.empty())) plan.decode_batch = std::move(decoding);
  plan.min_tpot_slo = min_tpot_slo(state.running);
  plan.vbs = static_cast<double>(plan.decode_batch.size());
  return plan;
}

}  // namespace

StepPlan plan_greedy(SchedulerState& state, const BaselineConfig& config) {
  sort_fcfs(state.waiting);
  return admit_and_batch(state, config);
}

StepPlan plan_sjf(SchedulerState& state, const BaselineConfig& config) {
  std::sort(state.waiting.begin(), state.waiting.end(),
            [](const WaitingEntry& a, const WaitingEntry& b) {
              if (a.predicted_len != b.predicted_len) return a.predicted_len < b.predicted_len;
              if (a.request.arrival_time != b.request.arrival_time) {
                return a.request.arrival_time < b.request.arrival_time;
              }
              return a.request.id < b.request.id;
            });
  return admit_and_batch(state, config);
}

StepPlan plan_early_reject(SchedulerState& state, const BaselineConfig& config,
                           const PrefillParams& prefill) {
  sort_fcfs(state.waiting);
  auto rejected = reject_unattainable_ttft(state, prefill);
  StepPlan plan = admit_and_batch(state, config);
  plan.rejected = std::move(rejected);
  return plan;
}

BaselinePolicy::BaselinePolicy(BaselineConfig config, PrefillParams prefill)
    : config_(config), prefill_(prefill) {
  validate(config_);
}

std::string_view BaselinePolicy::name() const {
  switch (config_.policy) {
    case BaselineKind::GreedyFcfs:
      return "greedy";
    case BaselineKind::ShortestPredictedJob:
      return "sjf";
    case BaselineKind::EarlyReject:
      return "early_reject";
  }
  return "greedy";
}

StepPlan BaselinePolicy::plan_step(SchedulerState& state) {
  switch (config_.policy) {
    case BaselineKind::GreedyFcfs:
      return plan_greedy(state, config_);
    case BaselineKind::ShortestPredictedJob:
      return plan_sjf(state, config_);
    case BaselineKind::EarlyReject:
      return plan_early_reject(state, config_, prefill_);
  }
  return plan_greedy(state, config_);
}

}  // namespace slosim
