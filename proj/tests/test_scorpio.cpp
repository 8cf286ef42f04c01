#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "slosim/scorpio.hpp"

using namespace slosim;
using oracle::make_request;

namespace {

constexpr double ms = 1e-3;

RunningEntry running(RequestId id, double tpot_slo, int prompt = 10, int tokens = 0) {
  RunningEntry e;
  e.request = make_request(id, 0.0, prompt, 1000, 10.0, tpot_slo);
  e.tokens_generated = tokens;
  return e;
}

WaitingEntry waiting(RequestId id, double arrival, double ttft_slo, int prompt = 10,
                     double tpot_slo = 0.05, int predicted = 10) {
  return {make_request(id, arrival, prompt, predicted, ttft_slo, tpot_slo), predicted};
}

ItlParams example_itl() {
  return {.alpha = 0.001 * ms, .beta = 1 * ms, .gamma = 0.01 * ms, .delta = 5 * ms, .epsilon = 1.0};
}

// Batch indicator per step for a lone request of relative rate `rho`
// (a second request holds the min SLO).
std::vector<bool> credit_trajectory(double rho, int steps) {
  SchedulerState s;
  s.running.push_back(running(0, 1.0));
  s.running.push_back(running(1, 1.0 / rho));
  std::vector<bool> hit;
  for (int i = 0; i < steps; ++i) {
    const auto b = select_batch(s);
    hit.push_back(std::find(b.begin(), b.end(), 1) != b.end());
  }
  return hit;
}

}  // namespace

TEST(Scorpio, TrpDefinition) {
  EXPECT_EQ(trp(0.03, 0.03), 1.0);
  EXPECT_NEAR(trp(0.05, 0.03), 0.6, 1e-15);
  EXPECT_THROW(trp(0.0, 0.03), std::invalid_argument);
  EXPECT_THROW(trp(0.05, -1.0), std::invalid_argument);
}

TEST(Scorpio, VirtualBatchSize) {
  std::vector<RunningEntry> r = {running(0, 0.03), running(1, 0.05), running(2, 0.05)};
  EXPECT_NEAR(vbs(r, 0.03), 2.2, 1e-12);
  std::vector<RunningEntry> same = {running(0, 0.05), running(1, 0.05), running(2, 0.05)};
  EXPECT_EQ(vbs(same, 0.05), 3.0);
  EXPECT_EQ(vbs(std::vector<RunningEntry>{}, 0.05), 0.0);
}

TEST(Scorpio, AdmissionWorkedExample) {
  SchedulerState s;
  s.running.push_back(running(0, 0.030, 100, 0));
  const auto cand = waiting(1, 0.0, 10.0, 100, 0.050, 20);
  const auto probe = probe_admission(RunningAggregate::of(s.running), cand, example_itl(),
                                     AdmissionMin::RPrime);
  EXPECT_NEAR(probe.vbs, 1.6, 1e-12);
  EXPECT_NEAR(probe.avg_len, 100, 1e-12);
  EXPECT_NEAR(probe.estimate, 7.876 * ms, 1e-15);
  EXPECT_EQ(probe.bound, 0.030);
  EXPECT_TRUE(admit(s, cand, example_itl()));
  ASSERT_EQ(s.running.size(), 2u);
  EXPECT_EQ(s.running[1].credit, 0.0);
}

TEST(Scorpio, AdmissionRefusedWhenEstimateExceedsMin) {
  SchedulerState s;
  for (int i = 0; i < 4; ++i) s.running.push_back(running(i, 0.010, 100));
  ItlParams p = example_itl();
  p.delta = 8 * ms;  // 4 * 1 + 8 + ... pushes a fifth member past 10 ms
  EXPECT_FALSE(admit(s, waiting(9, 0, 10, 100, 0.05, 20), p));
  EXPECT_EQ(s.running.size(), 4u);
}

TEST(Scorpio, AdmissionBoundModes) {
  RunningAggregate agg;
  agg.add(make_request(0, 0, 10, 10, 1, 0.050), 0);
  const auto strict = waiting(1, 0, 10, 10, 0.030, 10);
  EXPECT_EQ(probe_admission(agg, strict, example_itl(), AdmissionMin::RPrime).bound, 0.030);
  EXPECT_EQ(probe_admission(agg, strict, example_itl(), AdmissionMin::ROnly).bound, 0.050);
  EXPECT_EQ(probe_admission({}, strict, example_itl(), AdmissionMin::ROnly).bound, 0.030);
}

TEST(Scorpio, AggregateMatchesDirectComputation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> slo(0.01, 0.2);
  std::uniform_int_distribution<int> len(1, 3000);
  std::vector<RunningEntry> r;
  for (int i = 0; i < 40; ++i) r.push_back(running(i, slo(rng), len(rng), len(rng)));
  const auto cand = waiting(99, 0, 5, len(rng), slo(rng), len(rng));
  const auto probe = probe_admission(RunningAggregate::of(r), cand, example_itl(),
                                     AdmissionMin::RPrime);
  auto with = r;
  with.push_back({cand.request, 0, cand.predicted_len, 0.0, false});
  const double m = min_tpot_slo(with);
  EXPECT_NEAR(probe.vbs, vbs(with, m), 1e-9);
  EXPECT_NEAR(probe.avg_len, average_length(with), 1e-9);
  EXPECT_EQ(probe.bound, m);
}

TEST(Scorpio, CreditTrajectoryHandWorked) {
  const auto hit = credit_trajectory(0.6, 5);
  EXPECT_EQ(hit, (std::vector<bool>{false, true, false, true, true}));
}

TEST(Scorpio, CreditPeriodicCases) {
  EXPECT_EQ(credit_trajectory(1.0, 4), (std::vector<bool>{true, true, true, true}));
  EXPECT_EQ(credit_trajectory(0.5, 6), (std::vector<bool>{false, true, false, true, false, true}));
}

TEST(Scorpio, CreditRateConvergesAndStaysBounded) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double rho = trial < 6 ? std::vector<double>{0.1, 0.25, 0.5, 0.6, 0.9, 1.0}[trial] : u(rng);
    SchedulerState s;
    s.running.push_back(running(0, 1.0));
    s.running.push_back(running(1, 1.0 / rho));
    int count = 0;
    const int n = 1 + trial * 5;
    for (int i = 0; i < n; ++i) {
      const auto b = select_batch(s);
      count += std::find(b.begin(), b.end(), 1) != b.end();
      for (const auto& e : s.running) {
        EXPECT_GE(e.credit, 0.0);
        EXPECT_LT(e.credit, 2.0);
      }
    }
    EXPECT_LE(std::abs(double(count) / n - trp(1.0 / rho, 1.0)), 1.0 / n + 1e-12)
        << "rho=" << rho << " n=" << n;
  }
}

TEST(Scorpio, CreditPhaseIsScaleInvariant) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> ms_slo(10, 200);
  std::vector<RunningEntry> base;
  for (int i = 0; i < 12; ++i) base.push_back(running(i, ms_slo(rng) * ms));
  for (double factor : {0.25, 2.0, 8.0}) {
    SchedulerState a, b;
    a.running = base;
    b.running = base;
    for (auto& e : b.running) e.request.tpot_slo *= factor;
    for (int step = 0; step < 300; ++step) {
      ASSERT_EQ(select_batch(a), select_batch(b)) << "factor " << factor << " step " << step;
    }
  }
}

TEST(Scorpio, PrefillingEntriesSkipTheCreditPhase) {
  SchedulerState s;
  s.running.push_back(running(0, 0.03));
  s.running.push_back(running(1, 0.03));
  s.running[1].prefilling = true;
  EXPECT_EQ(select_batch(s), (std::vector<RequestId>{0}));
  EXPECT_EQ(s.running[1].credit, 0.0);
}

TEST(Scorpio, LdfOrder) {
  std::vector<WaitingEntry> w = {waiting(0, 0.0, 2.0), waiting(1, 0.0, 0.5), waiting(3, 1.0, 0.5),
                                 waiting(2, 1.0, 0.5), waiting(4, 0.5, 1.0)};
  sort_ldf(w);
  std::vector<RequestId> ids;
  for (const auto& e : w) ids.push_back(e.request.id);
  // 2, 3 and 4 share deadline 1.5; 4 arrived first, then id breaks the tie.
  EXPECT_EQ(ids, (std::vector<RequestId>{1, 4, 2, 3, 0}));
}

TEST(Scorpio, TtftGuardRejectsUnattainableTail) {
  const PrefillParams p{.phi = 0.2, .theta = 1000, .alpha_p = 0, .beta_p = 0};
  SchedulerState s;
  s.now = 0.0;
  for (int i = 0; i < 6; ++i) s.waiting.push_back(waiting(i, 0.0, 1.0));
  const auto rej = ttft_guard(s, p);
  ASSERT_EQ(s.waiting.size(), 5u);
  ASSERT_EQ(rej.size(), 1u);
  EXPECT_EQ(rej[0].id, 5);
  EXPECT_EQ(rej[0].reason, RejectReason::Ttft);
  EXPECT_GT(rej[0].estimate, 1.0);
}

TEST(Scorpio, TtftGuardElapsedWaitAndExclusion) {
  const PrefillParams p{.phi = 0.1, .theta = 1000, .alpha_p = 0, .beta_p = 0};
  SchedulerState s;
  s.now = 3.0;
  s.waiting.push_back(waiting(0, 0.0, 2.0));   // past its deadline
  s.waiting.push_back(waiting(1, 2.9, 0.25));  // 0.1 elapsed + 0.1 own prefill
  s.waiting.push_back(waiting(2, 2.95, 0.2));  // same deadline, arrived later
  const auto rej = ttft_guard(s, p);
  ASSERT_EQ(rej.size(), 2u);
  EXPECT_EQ(rej[0].id, 0);
  EXPECT_EQ(rej[1].id, 2);  // 0.05 + 0.1 + 0.1 > 0.2
  ASSERT_EQ(s.waiting.size(), 1u);
  EXPECT_EQ(s.waiting[0].request.id, 1);
}

TEST(Scorpio, TtftGuardKeepsFeasibleLoneRequest) {
  const PrefillParams p{.phi = 0.1, .theta = 1000, .alpha_p = 0, .beta_p = 0};
  SchedulerState s;
  s.waiting.push_back(waiting(0, 0.0, 0.5));
  EXPECT_TRUE(ttft_guard(s, p).empty());
}

TEST(Scorpio, PlanStepBootstrapAndEmpty) {
  CostModel cost;
  cost.itl = example_itl();
  cost.prefill = {.phi = 0.02, .theta = 128, .alpha_p = 0, .beta_p = 0.02};
  ScorpioPolicy policy({}, cost);
  SchedulerState s;
  auto plan = policy.plan_step(s);
  EXPECT_TRUE(plan.admitted.empty());
  EXPECT_TRUE(plan.decode_batch.empty());
  s.waiting.push_back(waiting(0, 0.0, 1.0, 10, 0.05, 10));
  plan = policy.plan_step(s);
  EXPECT_EQ(plan.admitted, (std::vector<RequestId>{0}));
  EXPECT_TRUE(plan.decode_batch.empty());
  EXPECT_TRUE(s.waiting.empty());
}

TEST(Scorpio, SoloInfeasibleCandidateIsRejected) {
  CostModel cost;
  cost.itl = example_itl();
  cost.prefill = {.phi = 0.001, .theta = 128, .alpha_p = 0, .beta_p = 0.001};
  ScorpioPolicy policy({}, cost);
  SchedulerState s;
  s.waiting.push_back(waiting(0, 0.0, 10.0, 10, 0.004, 10));  // idle estimate > 4 ms
  const auto plan = policy.plan_step(s);
  ASSERT_EQ(plan.rejected.size(), 1u);
  EXPECT_EQ(plan.rejected[0].reason, RejectReason::Admission);
  EXPECT_TRUE(s.waiting.empty());
}

TEST(Scorpio, GuardsCanBeDisabled) {
  CostModel cost;
  cost.itl = example_itl();
  cost.prefill = {.phi = 1.0, .theta = 128, .alpha_p = 0, .beta_p = 1.0};
  ScorpioConfig cfg;
  cfg.ttft_guard = false;
  cfg.tpot_guard = false;
  cfg.max_batch_size = 3;
  ScorpioPolicy policy(cfg, cost);
  SchedulerState s;
  for (int i = 0; i < 5; ++i) s.waiting.push_back(waiting(4 - i, 0.0, 0.5, 10, 0.001));
  const auto plan = policy.plan_step(s);
  EXPECT_TRUE(plan.rejected.empty());
  EXPECT_EQ(plan.admitted, (std::vector<RequestId>{4, 3, 2}));  // queue order untouched
  EXPECT_EQ(s.waiting.size(), 2u);
}
