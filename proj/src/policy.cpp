#include "slosim/policy.hpp"

#include <string>

#include "slosim/core.hpp"

namespace slosim {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Scorpio:
      return "scorpio";
    case PolicyKind::Greedy:
      return "greedy";
    case PolicyKind::Sjf:
      return "sjf";
    case PolicyKind::EarlyReject:
      return "early_reject";
  }
  return "scorpio";
}

PolicyKind policy_kind_from_string(std::string_view text) {
  for (auto k : {PolicyKind::Scorpio, PolicyKind::Greedy, PolicyKind::Sjf,
                 PolicyKind::EarlyReject}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown policy '" + std::string(text) +
                    "' (expected scorpio, greedy, sjf or early_reject)");
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const CostModel& cost) {
  if (config.kind == PolicyKind::Scorpio) {
    ScorpioConfig sc = config.scorpio;
    sc.max_batch_size = config.max_batch_size;
    return std::make_unique<ScorpioPolicy>(sc, cost);
  }
  BaselineConfig bc;
  bc.max_batch_size = config.max_batch_size;
  bc.prefill_priority = config.prefill_priority;
  bc.policy = config.kind == PolicyKind::Greedy ? BaselineKind::GreedyFcfs
              : config.kind == PolicyKind::Sjf  ? BaselineKind::ShortestPredictedJob
                                                : BaselineKind::EarlyReject;
  return std::make_unique<BaselinePolicy>(bc, cost.prefill);
}

}  // namespace slosim
