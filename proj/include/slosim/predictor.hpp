#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "slosim/core.hpp"

namespace slosim {

enum class BucketStrategy { EqualWidth, EqualFrequency };

std::string_view to_string(BucketStrategy strategy);
BucketStrategy bucket_strategy_from_string(std::string_view text);

// Output-length bins over (0, max_len]. Bucket k covers (b[k-1], b[k]] with
// b[-1] = 0. Lengths above max_len fall into the last bucket.
class Bucketing {
 public:
  static Bucketing equal_width(int num_buckets, int max_len);

  // Boundaries are nearest-rank quantiles of `sample`. Duplicate quantiles
  // (heavily tied samples) collapse, so size() can be below num_buckets.
  static Bucketing equal_frequency(int num_buckets, int max_len, std::span<const int> sample);

  int bucket_of(int length) const;

  // Bucket midpoint, rounded up, at least one token.
  int representative(int bucket) const;

  int size() const { return static_cast<int>(boundaries_.size()); }
  int max_len() const { return max_len_; }
  BucketStrategy strategy() const { return strategy_; }
  const std::vector<double>& boundaries() const { return boundaries_; }

 private:
  Bucketing(BucketStrategy strategy, int max_len, std::vector<double> boundaries);

  BucketStrategy strategy_;
  int max_len_;
  std::vector<double> boundaries_;
};

enum class PredictorMode { Oracle, NoisyBucket };

std::string_view to_string(PredictorMode mode);
PredictorMode predictor_mode_from_string(std::string_view text);

struct Prediction {
  int bucket = 0;
  int length = 1;  // scalar P(r) handed to the scheduler
};

// Stand-in for a learned length classifier. NoisyBucket shifts the true bucket
// by +/-k (k uniform in [1, error_spread]) with probability error_prob; the
// draw depends only on (seed, request id).
class LengthPredictor {
 public:
  LengthPredictor(PredictorMode mode, Bucketing bucketing, double error_prob = 0.0,
                  int error_spread = 1, std::uint64_t seed = 0);

  static LengthPredictor oracle(Bucketing bucketing);

  Prediction predict_detail(const Request& request) const;
  int predict(const Request& request) const { return predict_detail(request).length; }

  PredictorMode mode() const { return mode_; }
  const Bucketing& bucketing() const { return bucketing_; }
  double error_prob() const { return error_prob_; }
  int error_spread() const { return error_spread_; }

 private:
  PredictorMode mode_;
  Bucketing bucketing_;
  double error_prob_;
  int error_spread_;
  std::uint64_t seed_;
};

struct PredictorEval {
  std::size_t count = 0;
  double exact_acc = 0.0;
  double off_by_1_acc = 0.0;
  double off_by_2_acc = 0.0;
  double kendall_tau = 0.0;
  double rmse_tokens = 0.0;
};

// Accuracy over bucket indices, tau-b between predicted and true lengths,
// RMSE between the predicted bucket's representative and the true length.
PredictorEval evaluate(const LengthPredictor& predictor, std::span<const Request> requests);

// Tie-corrected Kendall tau in O(n log n). Returns 0 when either series is
// entirely tied.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

struct PredictorConfig {
  PredictorMode mode = PredictorMode::NoisyBucket;
  BucketStrategy strategy = BucketStrategy::EqualWidth;
  int num_buckets = 100;
  int max_len = 2048;
  double error_prob = 0.7;
  int error_spread = 3;
};

void validate(const PredictorConfig& config);

// EqualFrequency boundaries are taken from the true output lengths of `sample`.
LengthPredictor make_predictor(const PredictorConfig& config, std::span<const Request> sample,
                               std::uint64_t seed);

}  // namespace slosim
