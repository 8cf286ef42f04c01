#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"
#include "slosim/engine.hpp"
#include "slosim/policy.hpp"
#include "slosim/report.hpp"

using namespace slosim;
using oracle::make_request;

namespace {

LengthPredictor oracle_predictor() { return LengthPredictor::oracle(Bucketing::equal_width(64, 4096)); }

SimResult run_kind(const Trace& trace, PolicyKind kind, const CostModel& cost, int cap = 256,
                   bool prefill_priority = true, SimConfig sim = {}) {
  PolicyConfig pc;
  pc.kind = kind;
  pc.max_batch_size = cap;
  pc.prefill_priority = prefill_priority;
  auto policy = make_policy(pc, cost);
  return run(trace, *policy, oracle_predictor(), cost, sim);
}

Trace synthetic(double qps, double duration, std::uint64_t seed) {
  WorkloadSpec s;
  s.qps = qps;
  s.duration = duration;
  s.seed = seed;
  return generate(s);
}

class FixedPlan : public Policy {
 public:
  explicit FixedPlan(int mode) : mode_(mode) {}
  std::string_view name() const override { return "fixed"; }
  StepPlan plan_step(SchedulerState& s) override {
    StepPlan p;
    if (mode_ == 0 && !s.waiting.empty()) {  // admits and batches the same request
      s.running.push_back({s.waiting.front().request, 0, 1, 0, true});
      p.admitted.push_back(s.waiting.front().request.id);
      p.decode_batch.push_back(s.waiting.front().request.id);
      s.waiting.clear();
    } else if (mode_ == 1) {  // drops a request without reporting it
      s.waiting.clear();
    } else if (mode_ == 2 && !s.waiting.empty()) {  // batches a request that is not running
      p.decode_batch.push_back(s.waiting.front().request.id);
    }
    return p;
  }

 private:
  int mode_;
};

}  // namespace

TEST(Engine, EmptyTrace) {
  const auto r = run_kind({}, PolicyKind::Scorpio, CostModel::reference());
  EXPECT_TRUE(r.outcomes.empty());
  EXPECT_EQ(r.log.step_count, 0u);
  EXPECT_EQ(r.end_time, 0.0);
}

TEST(Engine, GoldenSingleRequest) {
  // prefill 100 <= 128 tokens: 20 ms; decode at L = 101 then 102:
  // 0.101 + 1 + 1.01 + 5 = 7.111 ms, 0.102 + 1 + 1.02 + 5 = 7.122 ms
  const Trace t = {make_request(0, 0.0, 100, 3, 1.0, 0.05)};
  SimConfig sim;
  sim.log_decisions = true;
  const auto r = run_kind(t, PolicyKind::Greedy, scenario::example_cost(), 256, true, sim);
  ASSERT_EQ(r.outcomes.size(), 1u);
  const auto& o = r.outcomes[0];
  EXPECT_EQ(o.status, RequestStatus::Completed);
  EXPECT_NEAR(*o.ttft, 0.020, 1e-15);
  ASSERT_EQ(r.log.steps.size(), 3u);
  EXPECT_NEAR(r.log.steps[1].duration, 0.007111, 1e-15);
  EXPECT_NEAR(r.log.steps[2].duration, 0.007122, 1e-15);
  EXPECT_NEAR(*o.tpot, 0.0071165, 1e-15);
  EXPECT_NEAR(*o.completion_time, 0.034233, 1e-15);
  EXPECT_TRUE(o.slo_compliant);

  const auto s = run_kind(t, PolicyKind::Scorpio, scenario::example_cost());
  EXPECT_EQ(s.outcomes, r.outcomes);
}

TEST(Engine, MatchesStepCalculator) {
  const auto cost = scenario::integer_cost();
  const std::pair<oracle::Sched, PolicyKind> cases[] = {
      {oracle::Sched::Greedy, PolicyKind::Greedy},
      {oracle::Sched::EarlyReject, PolicyKind::EarlyReject},
      {oracle::Sched::Scorpio, PolicyKind::Scorpio},
  };
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto trace = scenario::small_random_trace(seed);
    for (int cap : {2, 3, 256}) {
      for (const auto& [sched, kind] : cases) {
        const auto want = oracle::simulate(trace, cost, sched, cap);
        const auto got = run_kind(trace, kind, cost, cap).outcomes;
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          SCOPED_TRACE("seed " + std::to_string(seed) + " cap " + std::to_string(cap) + " " +
                       std::string(to_string(kind)) + " id " + std::to_string(got[i].id));
          EXPECT_EQ(to_string(got[i].status), want[i].status);
          if (want[i].status == "completed") {
            EXPECT_NEAR(*got[i].ttft, want[i].ttft, 1e-9);
            EXPECT_NEAR(*got[i].tpot, want[i].tpot, 1e-9);
          }
        }
      }
      const auto want = oracle::simulate(trace, cost, oracle::Sched::GreedyPiggyback, cap);
      const auto got = run_kind(trace, PolicyKind::Greedy, cost, cap, false).outcomes;
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(to_string(got[i].status), want[i].status);
        if (want[i].status == "completed") {
          EXPECT_NEAR(*got[i].tpot, want[i].tpot, 1e-9);
        }
      }
    }
  }
}

TEST(Engine, ConservationTokensAndClock) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto trace = synthetic(25, 12, seed);
    for (auto kind : {PolicyKind::Scorpio, PolicyKind::Greedy, PolicyKind::Sjf,
                      PolicyKind::EarlyReject}) {
      SimConfig sim;
      sim.log_decisions = true;
      const auto r = run_kind(trace, kind, CostModel::reference(), 64, true, sim);
      ASSERT_EQ(r.outcomes.size(), trace.size());
      std::map<RequestStatus, std::size_t> by_status;
      for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& o = r.outcomes[i];
        EXPECT_EQ(o.id, trace[i].id);
        ++by_status[o.status];
        const auto& times = r.log.token_times[i];
        if (o.status == RequestStatus::Completed) {
          EXPECT_EQ(times.size(), static_cast<std::size_t>(trace[i].true_output_len));
          EXPECT_TRUE(std::is_sorted(times.begin(), times.end()));
          EXPECT_GE(*o.first_token_time, trace[i].arrival_time);
        } else {
          EXPECT_TRUE(times.empty());
        }
      }
      std::size_t total = 0;
      for (const auto& [s, n] : by_status) total += n;
      EXPECT_EQ(total, trace.size());
      EXPECT_EQ(by_status[RequestStatus::Unfinished], 0u);
      for (std::size_t k = 1; k < r.log.steps.size(); ++k) {
        const auto& prev = r.log.steps[k - 1];
        EXPECT_GT(prev.duration, 0.0);
        EXPECT_GE(r.log.steps[k].start, prev.start + prev.duration);
      }
    }
  }
}

TEST(Engine, GreedyNeverRejects) {
  const auto trace = synthetic(60, 10, 3);
  const auto r = run_kind(trace, PolicyKind::Greedy, CostModel::reference(), 32);
  for (const auto& o : r.outcomes) EXPECT_EQ(o.status, RequestStatus::Completed);
}

TEST(Engine, GreedyIsWorkConserving) {
  const auto trace = synthetic(15, 10, 5);
  SimConfig sim;
  sim.log_decisions = true;
  const auto r = run_kind(trace, PolicyKind::Greedy, CostModel::reference(), 100000, true, sim);
  std::map<RequestId, std::size_t> admitted_at;
  for (std::size_t k = 0; k < r.log.steps.size(); ++k) {
    for (auto id : r.log.steps[k].admitted) admitted_at[id] = k;
  }
  for (const auto& req : trace) {
    std::size_t first = 0;
    while (r.log.steps[first].start < req.arrival_time) ++first;
    EXPECT_EQ(admitted_at.at(req.id), first) << "request " << req.id;
  }
}

TEST(Engine, SjfLowersMeanTtftOnHomogeneousLoad) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    WorkloadSpec s;
    s.qps = 20;
    s.duration = 20;
    s.seed = seed;
    s.category_weights = {0, 0, 0, 0, 0, 1};
    const auto trace = generate(s);
    auto mean_ttft = [&](PolicyKind k) {
      const auto r = run_kind(trace, k, CostModel::reference(), 16);
      double sum = 0;
      for (const auto& o : r.outcomes) sum += *o.ttft;
      return sum / static_cast<double>(r.outcomes.size());
    };
    EXPECT_LE(mean_ttft(PolicyKind::Sjf), mean_ttft(PolicyKind::Greedy)) << "seed " << seed;
  }
}

TEST(Engine, EarlyRejectCompletesSubsetOfGreedy) {
  const auto trace = synthetic(30, 10, 9);
  const auto g = run_kind(trace, PolicyKind::Greedy, CostModel::reference(), 100000);
  const auto e = run_kind(trace, PolicyKind::EarlyReject, CostModel::reference(), 100000);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (e.outcomes[i].status == RequestStatus::Completed) {
      EXPECT_EQ(g.outcomes[i].status, RequestStatus::Completed);
    }
  }
}

TEST(Engine, Deterministic) {
  const auto trace = synthetic(30, 10, 1);
  const auto predictor =
      LengthPredictor(PredictorMode::NoisyBucket, Bucketing::equal_width(100, 2048), 0.7, 3, 77);
  std::string first;
  for (int rep = 0; rep < 3; ++rep) {
    PolicyConfig pc;
    auto policy = make_policy(pc, CostModel::reference());
    SimConfig sim;
    sim.log_decisions = true;
    const auto r = run(trace, *policy, predictor, CostModel::reference(), sim);
    const std::string bytes = format_outcomes_csv(r.outcomes) + format_decision_log(r.log);
    if (rep == 0) first = bytes;
    EXPECT_EQ(bytes, first);
  }
}

TEST(Engine, HorizonLeavesUnfinishedRequests) {
  const auto trace = synthetic(40, 20, 2);
  SimConfig sim;
  sim.horizon = 5.0;
  const auto r = run_kind(trace, PolicyKind::Greedy, CostModel::reference(), 256, true, sim);
  std::size_t unfinished = 0;
  for (const auto& o : r.outcomes) unfinished += o.status == RequestStatus::Unfinished;
  EXPECT_GT(unfinished, 0u);
  EXPECT_LT(r.end_time, 5.5);
  EXPECT_GE(r.end_time, 5.0);
  sim.horizon = -1.0;
  EXPECT_THROW(run_kind(trace, PolicyKind::Greedy, CostModel::reference(), 256, true, sim),
               std::invalid_argument);
}

TEST(Engine, PolicyInvariantBreachesAreErrors) {
  const Trace t = {make_request(0, 0.0, 10, 3, 1.0, 0.05)};
  for (int mode : {0, 1, 2}) {
    FixedPlan p(mode);
    EXPECT_THROW(run(t, p, oracle_predictor(), CostModel::reference(), {}), std::logic_error)
        << "mode " << mode;
  }
}

TEST(Engine, DuplicateIdsRejected) {
  const Trace t = {make_request(0, 0.0, 10, 3, 1.0, 0.05), make_request(0, 1.0, 10, 3, 1.0, 0.05)};
  EXPECT_THROW(run_kind(t, PolicyKind::Greedy, CostModel::reference()), std::invalid_argument);
}

TEST(Engine, OverheadDefinition) {
  const auto trace = synthetic(20, 10, 4);
  const auto r = run_kind(trace, PolicyKind::Scorpio, CostModel::reference());
  const auto o = measure_overhead(r);
  EXPECT_EQ(o.total_s, r.end_time);
  EXPECT_GE(o.schedule_s, o.policy_s);
  EXPECT_GE(o.policy_s, 0.0);
  EXPECT_DOUBLE_EQ(o.overhead_pct, o.policy_s / o.total_s * 100.0);
}

TEST(Engine, OutputFormats) {
  const Trace t = {make_request(0, 0.0, 100, 3, 1.0, 0.05), make_request(1, 0.0, 100, 1, 1e-9, 1.0)};
  SimConfig sim;
  sim.log_decisions = true;
  const auto r = run_kind(t, PolicyKind::Scorpio, scenario::example_cost(), 256, true, sim);
  const auto csv = format_outcomes_csv(r.outcomes);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,status,ttft_s,tpot_ms,compliant,category");
  EXPECT_NE(csv.find("\n1,rejected_ttft,,,0,1\n"), std::string::npos) << csv;
  std::istringstream in(format_decision_log(r.log));
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  for (const char* key : {"step", "now_s", "duration_s", "admitted", "admit_est_ms", "rejected",
                          "batch", "vbs", "min_slo_ms"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["rejected"][0]["reason"], "ttft");
}

TEST(SixRequestScenario, GreedyViolatesTightRequests) {
  const auto r = run_kind(scenario::six_request_trace(), PolicyKind::Greedy, scenario::six_request_cost());
  for (const auto& o : r.outcomes) {
    ASSERT_EQ(o.status, RequestStatus::Completed);
    EXPECT_DOUBLE_EQ(*o.ttft, 1.5);
    EXPECT_DOUBLE_EQ(*o.tpot, 1.5);
    const bool loose = o.id == 2 || o.id == 4;
    EXPECT_EQ(o.slo_compliant, loose) << "request " << o.id;
  }
}

TEST(SixRequestScenario, ScorpioRejectsOneAndServesTheRest) {
  SimConfig sim;
  sim.log_decisions = true;
  const auto r = run_kind(scenario::six_request_trace(), PolicyKind::Scorpio, scenario::six_request_cost(),
                          256, true, sim);
  for (const auto& o : r.outcomes) {
    if (o.id == 5) {
      EXPECT_EQ(o.status, RequestStatus::RejectedTtft);
      continue;
    }
    EXPECT_EQ(o.status, RequestStatus::Completed);
    EXPECT_TRUE(o.slo_compliant) << "request " << o.id;
  }
  EXPECT_DOUBLE_EQ(*r.outcomes[0].tpot, 1.0);
  EXPECT_DOUBLE_EQ(*r.outcomes[2].tpot, 1.25);
  // Virtual batch of 4 while all five are resident; loose requests skip steps.
  EXPECT_DOUBLE_EQ(r.log.steps[1].vbs, 4.0);
  EXPECT_EQ(r.log.steps[1].batch, (std::vector<RequestId>{0, 1, 3}));
  EXPECT_EQ(r.log.steps[2].batch, (std::vector<RequestId>{0, 1, 2, 3, 4}));
}
