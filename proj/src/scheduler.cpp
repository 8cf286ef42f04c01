#include "slosim/scheduler.hpp"

#include <algorithm>

namespace slosim {

std::string_view to_string(RejectReason reason) {
  return reason == RejectReason::Ttft ? "ttft" : "admission";
}

double min_tpot_slo(const std::vector<RunningEntry>& running) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : running) m = std::min(m, e.request.tpot_slo);
  return m;
}

std::vector<Rejection> reject_unattainable_ttft(SchedulerState& state,
                                                const PrefillParams& params) {
  std::vector<Rejection> rejected;
  std::vector<WaitingEntry> kept;
  kept.reserve(state.waiting.size());
  double prefix = 0.0;
  for (auto& w : state.waiting) {
    const double with_self = prefix + prefill_time(params, w.request.prompt_len);
    const double estimate = (state.now - w.request.arrival_time) + with_self;
    if (estimate > w.request.ttft_slo) {
      rejected.push_back({w.request.id, RejectReason::Ttft, estimate});
    } else {
      prefix = with_self;
      kept.push_back(std::move(w));
    }
  }
  state.waiting = std::move(kept);
  return rejected;
}

}  // namespace slosim
