#pragma once

#include <span>
#include <vector>

#include "slosim/costmodel.hpp"
#include "slosim/scheduler.hpp"

namespace slosim {

// Which set the admission bound's min SLO ranges over: the post-admission set
// R' = R + {w} (default) or the already-running set R.
enum class AdmissionMin { RPrime, ROnly };

struct ScorpioConfig {
  bool ttft_guard = true;  // LDF reordering + unattainable-TTFT rejection
  bool tpot_guard = true;  // VBS admission control + credit-based batching
  AdmissionMin admission_min = AdmissionMin::RPrime;
  int max_batch_size = 256;
};

// Credits within this distance of 1.0 count as 1.0, absorbing rounding in
// repeated fractional TRP additions (e.g. 0.4 + 0.6).
inline constexpr double kCreditEpsilon = 1e-9;

// TPOT-relative proportionality: min_slo / tpot_slo, in (0, 1].
double trp(double tpot_slo, double min_slo);

// Virtual batch size: sum of TRPs against `min_slo`.
double vbs(std::span<const RunningEntry> running, double min_slo);

// Mean of (prompt_len + tokens_generated).
double average_length(std::span<const RunningEntry> running);

// Running totals that let the admission scan evaluate R' = R + {w} in O(1).
struct RunningAggregate {
  std::size_t count = 0;
  double inverse_slo_sum = 0.0;
  double length_sum = 0.0;
  double min_slo = std::numeric_limits<double>::infinity();

  static RunningAggregate of(std::span<const RunningEntry> running);
  void add(const Request& request, int tokens_generated);
};

struct AdmissionProbe {
  double vbs = 0.0;
  double avg_len = 0.0;
  double estimate = 0.0;  // estimated TPOT of R', seconds
  double bound = 0.0;     // min TPOT SLO it must not exceed

  bool feasible() const { return estimate <= bound; }
};

AdmissionProbe probe_admission(const RunningAggregate& running, const WaitingEntry& candidate,
                               const ItlParams& params, AdmissionMin mode);

// Admission test for `candidate` against the current running set. On success
// the candidate is appended to `state.running` with zero credit; the caller
// removes it from the waiting queue.
bool admit(SchedulerState& state, const WaitingEntry& candidate, const ItlParams& params,
           AdmissionMin mode = AdmissionMin::RPrime);

// Credit phase: every non-prefilling entry earns its TRP; entries reaching 1.0
// join the batch and are debited 1.0. TRPs use the min SLO of the whole running
// set, balances carry over when that min changes.
std::vector<RequestId> select_batch(SchedulerState& state);

// Least-deadline-first order: (arrival + ttft_slo, arrival, id).
void sort_ldf(std::vector<WaitingEntry>& waiting);

// LDF-sorts the queue, then drops requests whose elapsed wait plus prefix
// prefill sum exceeds their TTFT SLO. Dropped requests do not count toward
// later prefix sums.
std::vector<Rejection> ttft_guard(SchedulerState& state, const PrefillParams& params);

class ScorpioPolicy : public Policy {
 public:
  ScorpioPolicy(ScorpioConfig config, CostModel cost);

  std::string_view name() const override { return "scorpio"; }
  StepPlan plan_step(SchedulerState& state) override;

  const ScorpioConfig& config() const { return config_; }

 private:
  ScorpioConfig config_;
  CostModel cost_;
};

}  // namespace slosim
