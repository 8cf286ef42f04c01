#pragma once

#include <limits>
#include <string_view>
#include <vector>

#include "slosim/core.hpp"
#include "slosim/costmodel.hpp"

namespace slosim {

struct WaitingEntry {
  Request request;
  int predicted_len = 1;  // P(r), fixed at arrival
};

struct RunningEntry {
  Request request;
  int tokens_generated = 0;
  int predicted_len = 1;
  double credit = 0.0;
  // Admitted in the current step: prefilling, not yet eligible for decode.
  bool prefilling = false;
};

// Everything a policy may mutate. The engine owns it; a policy moves requests
// from `waiting` to `running` (or drops them) and updates credits.
struct SchedulerState {
  std::vector<WaitingEntry> waiting;
  std::vector<RunningEntry> running;
  double now = 0.0;
};

enum class RejectReason { Ttft, Admission };

std::string_view to_string(RejectReason reason);

struct Rejection {
  RequestId id = 0;
  RejectReason reason = RejectReason::Ttft;
  double estimate = 0.0;  // the estimate (seconds) that failed its SLO

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

// One iteration's decisions. Admitted requests prefill in this step and first
// appear in a decode batch on a later step.
struct StepPlan {
  std::vector<RequestId> admitted;
  std::vector<double> admission_estimates;  // parallel to `admitted`; empty if unused
  std::vector<RequestId> decode_batch;
  std::vector<Rejection> rejected;
  double vbs = 0.0;
  double min_tpot_slo = std::numeric_limits<double>::infinity();
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  virtual StepPlan plan_step(SchedulerState& state) = 0;
};

// Smallest TPOT SLO among running entries; +inf when empty.
double min_tpot_slo(const std::vector<RunningEntry>& running);

// Walks the queue in its current order and drops every request whose elapsed
// wait plus the prefix sum of prefills (its own included) exceeds its TTFT SLO.
// Dropped requests do not count toward later prefix sums.
std::vector<Rejection> reject_unattainable_ttft(SchedulerState& state, const PrefillParams& params);

}  // namespace slosim
