#pragma once

#include <memory>
#include <string_view>

#include "slosim/baselines.hpp"
#include "slosim/costmodel.hpp"
#include "slosim/scorpio.hpp"

namespace slosim {

enum class PolicyKind { Scorpio, Greedy, Sjf, EarlyReject };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view text);  // throws ConfigError

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Scorpio;
  ScorpioConfig scorpio;
  int max_batch_size = 256;  // shared by every policy
  bool prefill_priority = true;  // baselines only
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const CostModel& cost);

}  // namespace slosim
