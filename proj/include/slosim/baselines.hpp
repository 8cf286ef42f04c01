#pragma once

#include <string_view>

#include "slosim/costmodel.hpp"
#include "slosim/scheduler.hpp"

namespace slosim {

enum class BaselineKind { GreedyFcfs, ShortestPredictedJob, EarlyReject };

struct BaselineConfig {
  BaselineKind policy = BaselineKind::GreedyFcfs;
  int max_batch_size = 256;
  // vLLM-style: a step that admits anything runs prefills only and pauses
  // decode. When false, admissions share the step with a full decode batch.
  bool prefill_priority = true;
};

void validate(const BaselineConfig& config);

// FCFS admission up to the cap; every running entry decodes every step.
StepPlan plan_greedy(SchedulerState& state, const BaselineConfig& config);

// Queue ordered by predicted output length (ties: arrival, id), then greedy.
StepPlan plan_sjf(SchedulerState& state, const BaselineConfig& config);

// FCFS with unattainable-TTFT rejection, then greedy.
StepPlan plan_early_reject(SchedulerState& state, const BaselineConfig& config,
                           const PrefillParams& prefill);

class BaselinePolicy : public Policy {
 public:
  BaselinePolicy(BaselineConfig config, PrefillParams prefill);

  std::string_view name() const override;
  StepPlan plan_step(SchedulerState& state) override;

 private:
  BaselineConfig config_;
  PrefillParams prefill_;
};

}  // namespace slosim
