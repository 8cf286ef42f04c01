#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "slosim/predictor.hpp"

using namespace slosim;
using oracle::make_request;

namespace {

std::vector<Request> corpus(std::size_t n, std::uint64_t seed, int max_len = 2048) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> len(5.0, 0.9);
  std::vector<Request> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int l = std::clamp(static_cast<int>(len(rng)), 1, max_len);
    out.push_back(make_request(static_cast<RequestId>(i), 0.0, 10, l, 1.0, 0.05));
  }
  return out;
}

void expect_matches_oracle(const LengthPredictor& p, const std::vector<Request>& reqs) {
  std::vector<int> truth, buckets, lengths;
  for (const auto& r : reqs) {
    const auto pr = p.predict_detail(r);
    truth.push_back(r.true_output_len);
    buckets.push_back(pr.bucket);
    lengths.push_back(pr.length);
  }
  const auto ref = oracle::predictor_metrics(p.bucketing().boundaries(), truth, buckets, lengths);
  const auto got = evaluate(p, reqs);
  EXPECT_EQ(got.count, reqs.size());
  EXPECT_EQ(got.exact_acc, ref.exact);
  EXPECT_EQ(got.off_by_1_acc, ref.off1);
  EXPECT_EQ(got.off_by_2_acc, ref.off2);
  EXPECT_NEAR(got.kendall_tau, ref.tau, 1e-12);
  EXPECT_NEAR(got.rmse_tokens, ref.rmse, 1e-9);
}

}  // namespace

TEST(Bucketing, EqualWidthEdges) {
  const auto b = Bucketing::equal_width(4, 100);
  EXPECT_EQ(b.size(), 4);
  EXPECT_EQ(b.bucket_of(1), 0);
  EXPECT_EQ(b.bucket_of(25), 0);
  EXPECT_EQ(b.bucket_of(26), 1);
  EXPECT_EQ(b.bucket_of(100), 3);
  EXPECT_EQ(b.bucket_of(5000), 3);
  EXPECT_THROW(b.bucket_of(0), std::invalid_argument);
  EXPECT_EQ(b.representative(0), 13);
  EXPECT_EQ(b.representative(3), 88);
  EXPECT_THROW(b.representative(4), std::out_of_range);
}

TEST(Bucketing, EqualFrequencyQuantiles) {
  std::vector<int> sample;
  for (int i = 1; i <= 100; ++i) sample.push_back(i);
  const auto b = Bucketing::equal_frequency(4, 1000, sample);
  EXPECT_EQ(b.boundaries(), (std::vector<double>{25, 50, 75, 1000}));
  const std::vector<int> tied(50, 7);
  EXPECT_EQ(Bucketing::equal_frequency(10, 100, tied).size(), 2);
  EXPECT_THROW(Bucketing::equal_frequency(4, 100, std::vector<int>{}), std::invalid_argument);
}

TEST(Predictor, OracleIsExact) {
  const auto reqs = corpus(300, 1);
  const auto p = LengthPredictor::oracle(Bucketing::equal_width(50, 2048));
  for (const auto& r : reqs) EXPECT_EQ(p.predict(r), r.true_output_len);
  const auto e = evaluate(p, reqs);
  EXPECT_EQ(e.exact_acc, 1.0);
  EXPECT_EQ(e.off_by_1_acc, 1.0);
  EXPECT_NEAR(e.kendall_tau, 1.0, 1e-12);
}

TEST(Predictor, NoisyDrawDependsOnlyOnSeedAndId) {
  const auto b = Bucketing::equal_width(100, 2048);
  const LengthPredictor a(PredictorMode::NoisyBucket, b, 0.7, 3, 99);
  const LengthPredictor c(PredictorMode::NoisyBucket, b, 0.7, 3, 99);
  const auto reqs = corpus(200, 2);
  int moved = 0;
  for (auto it = reqs.rbegin(); it != reqs.rend(); ++it) {
    EXPECT_EQ(a.predict(*it), c.predict(*it));
    const int d = std::abs(a.predict_detail(*it).bucket - b.bucket_of(it->true_output_len));
    EXPECT_LE(d, 3);
    moved += d > 0;
  }
  EXPECT_GT(moved, 100);
  EXPECT_LT(moved, 180);
}

TEST(Predictor, MetricsMatchBruteForceOn200Rows) {
  const auto reqs = corpus(200, 3);
  expect_matches_oracle(
      LengthPredictor(PredictorMode::NoisyBucket, Bucketing::equal_width(100, 2048), 0.6, 3, 5),
      reqs);
  std::vector<int> lens;
  for (const auto& r : reqs) lens.push_back(r.true_output_len);
  expect_matches_oracle(LengthPredictor(PredictorMode::NoisyBucket,
                                        Bucketing::equal_frequency(20, 2048, lens), 0.5, 2, 6),
                        reqs);
  expect_matches_oracle(LengthPredictor::oracle(Bucketing::equal_width(10, 2048)), reqs);
}

TEST(Predictor, OffByAccuracyIsMonotone) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto reqs = corpus(60, 1000 + seed);
    const LengthPredictor p(PredictorMode::NoisyBucket, Bucketing::equal_width(30, 2048),
                            (seed % 10) / 10.0, 1 + seed % 4, seed);
    const auto e = evaluate(p, reqs);
    EXPECT_GE(e.off_by_2_acc, e.off_by_1_acc);
    EXPECT_GE(e.off_by_1_acc, e.exact_acc);
  }
}

TEST(Predictor, EvaluateNeedsTwoRows) {
  const auto p = LengthPredictor::oracle(Bucketing::equal_width(10, 100));
  EXPECT_THROW(evaluate(p, corpus(1, 0, 100)), std::invalid_argument);
}

TEST(KendallTau, MatchesBruteForceWithTies) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> small(0, 6);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial * 3;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = small(rng);
      y[i] = small(rng) + (trial % 2 ? x[i] : 0);
    }
    EXPECT_NEAR(kendall_tau_b(x, y), oracle::tau_b(x, y), 1e-12) << "n=" << n;
  }
}

TEST(KendallTau, DegenerateSeries) {
  const std::vector<double> flat = {2, 2, 2};
  const std::vector<double> up = {1, 2, 3};
  const std::vector<double> down = {3, 2, 1};
  EXPECT_EQ(kendall_tau_b(flat, up), 0.0);
  EXPECT_NEAR(kendall_tau_b(up, down), -1.0, 1e-15);
  EXPECT_THROW(kendall_tau_b(up, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Predictor, FactoryBuildsConfiguredBucketing) {
  const auto reqs = corpus(500, 4);
  PredictorConfig c;
  c.strategy = BucketStrategy::EqualFrequency;
  c.num_buckets = 8;
  const auto p = make_predictor(c, reqs, 1);
  EXPECT_EQ(p.bucketing().strategy(), BucketStrategy::EqualFrequency);
  EXPECT_LE(p.bucketing().size(), 8);
  c.mode = PredictorMode::Oracle;
  EXPECT_EQ(make_predictor(c, reqs, 1).mode(), PredictorMode::Oracle);
  c.error_prob = 2.0;
  EXPECT_THROW(make_predictor(c, reqs, 1), ConfigError);
}
