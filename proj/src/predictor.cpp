#include "slosim/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "slosim/util.hpp"

namespace slosim {

std::string_view to_string(BucketStrategy strategy) {
  return strategy == BucketStrategy::EqualWidth ? "equal_width" : "equal_frequency";
}

BucketStrategy bucket_strategy_from_string(std::string_view text) {
  if (text == "equal_width") return BucketStrategy::EqualWidth;
  if (text == "equal_frequency") return BucketStrategy::EqualFrequency;
  throw ConfigError("unknown bucketing strategy '" + std::string(text) + "'");
}

std::string_view to_string(PredictorMode mode) {
  return mode == PredictorMode::Oracle ? "oracle" : "noisy_bucket";
}

PredictorMode predictor_mode_from_string(std::string_view text) {
  if (text == "oracle") return PredictorMode::Oracle;
  if (text == "noisy_bucket") return PredictorMode::NoisyBucket;
  throw ConfigError("unknown predictor mode '" + std::string(text) + "'");
}

Bucketing::Bucketing(BucketStrategy strategy, int max_len, std::vector<double> boundaries)
    : strategy_(strategy), max_len_(max_len), boundaries_(std::move(boundaries)) {}

Bucketing Bucketing::equal_width(int num_buckets, int max_len) {
  if (num_buckets < 1 || max_len < 1) {
    throw std::invalid_argument("equal_width: num_buckets and max_len must be >= 1");
  }
  std::vector<double> b(static_cast<std::size_t>(num_buckets));
  for (int k = 1; k <= num_buckets; ++k) {
    b[static_cast<std::size_t>(k - 1)] = static_cast<double>(max_len) * k / num_buckets;
  }
  return Bucketing(BucketStrategy::EqualWidth, max_len, std::move(b));
}

Bucketing Bucketing::equal_frequency(int num_buckets, int max_len, std::span<const int> sample) {
  if (num_buckets < 1 || max_len < 1) {
    throw std::invalid_argument("equal_frequency: num_buckets and max_len must be >= 1");
  }
  if (sample.empty()) throw std::invalid_argument("equal_frequency: empty training sample");
  std::vector<int> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> b;
  for (int k = 1; k < num_buckets; ++k) {
    // nearest-rank quantile k/K
    const std::size_t rank = (static_cast<std::size_t>(k) * n + num_buckets - 1) / num_buckets;
    const double q = sorted[std::max<std::size_t>(rank, 1) - 1];
    if (q >= max_len) break;
    if (b.empty() || q > b.back()) b.push_back(q);
  }
  b.push_back(static_cast<double>(max_len));
  return Bucketing(BucketStrategy::EqualFrequency, max_len, std::move(b));
}

int Bucketing::bucket_of(int length) const {
  if (length < 1) throw std::invalid_argument("bucket_of: length must be >= 1");
  if (length > max_len_) {
    static std::once_flag warned;
    std::call_once(warned, [&] {
      std::clog << "slosim: length " << length << " exceeds max_len " << max_len_
                << ", clamping to the last bucket\n";
    });
    return size() - 1;
  }
  auto it = std::lower_bound(boundaries_.begin(), boundaries_.end(), static_cast<double>(length));
  return static_cast<int>(it - boundaries_.begin());
}

int Bucketing::representative(int bucket) const {
  if (bucket < 0 || bucket >= size()) {
    throw std::out_of_range("representative: bucket " + std::to_string(bucket) +
                            " outside [0, " + std::to_string(size()) + ")");
  }
  const double hi = boundaries_[static_cast<std::size_t>(bucket)];
  const double lo = bucket == 0 ? 0.0 : boundaries_[static_cast<std::size_t>(bucket - 1)];
  return std::max(1, static_cast<int>(std::ceil((lo + hi) / 2.0)));
}

LengthPredictor::LengthPredictor(PredictorMode mode, Bucketing bucketing, double error_prob,
                                 int error_spread, std::uint64_t seed)
    : mode_(mode),
      bucketing_(std::move(bucketing)),
      error_prob_(error_prob),
      error_spread_(error_spread),
      seed_(seed) {
  if (!(error_prob >= 0.0 && error_prob <= 1.0)) {
    throw std::invalid_argument("LengthPredictor: error_prob must be in [0, 1]");
  }
  if (error_spread < 1) throw std::invalid_argument("LengthPredictor: error_spread must be >= 1");
}

LengthPredictor LengthPredictor::oracle(Bucketing bucketing) {
  return LengthPredictor(PredictorMode::Oracle, std::move(bucketing));
}

Prediction LengthPredictor::predict_detail(const Request& request) const {
  const int true_bucket = bucketing_.bucket_of(request.true_output_len);
  if (mode_ == PredictorMode::Oracle) {
    return {true_bucket, request.true_output_len};
  }
  std::mt19937_64 rng(derive_seed(seed_, static_cast<std::uint64_t>(request.id)));
  int bucket = true_bucket;
  if (std::bernoulli_distribution(error_prob_)(rng)) {
    const int k = std::uniform_int_distribution<int>(1, error_spread_)(rng);
    const bool up = std::bernoulli_distribution(0.5)(rng);
    bucket = std::clamp(true_bucket + (up ? k : -k), 0, bucketing_.size() - 1);
  }
  return {bucket, bucketing_.representative(bucket)};
}

PredictorEval evaluate(const LengthPredictor& predictor, std::span<const Request> requests) {
  if (requests.size() < 2) {
    throw std::invalid_argument("evaluate: need at least 2 requests for Kendall's tau");
  }
  const Bucketing& bucketing = predictor.bucketing();
  std::size_t exact = 0, off1 = 0, off2 = 0;
  double sq = 0.0;
  std::vector<double> predicted, truth;
  predicted.reserve(requests.size());
  truth.reserve(requests.size());
  for (const auto& r : requests) {
    const Prediction p = predictor.predict_detail(r);
    const int diff = std::abs(p.bucket - bucketing.bucket_of(r.true_output_len));
    exact += diff == 0;
    off1 += diff <= 1;
    off2 += diff <= 2;
    const double err = bucketing.representative(p.bucket) - static_cast<double>(r.true_output_len);
    sq += err * err;
    predicted.push_back(p.length);
    truth.push_back(r.true_output_len);
  }
  const double n = static_cast<double>(requests.size());
  PredictorEval eval;
  eval.count = requests.size();
  eval.exact_acc = static_cast<double>(exact) / n;
  eval.off_by_1_acc = static_cast<double>(off1) / n;
  eval.off_by_2_acc = static_cast<double>(off2) / n;
  eval.kendall_tau = kendall_tau_b(predicted, truth);
  eval.rmse_tokens = std::sqrt(sq / n);
  return eval;
}

namespace {

// Bottom-up merge sort counting strict inversions.
std::int64_t count_inversions(std::vector<double>& v) {
  std::int64_t swaps = 0;
  std::vector<double> buf(v.size());
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    v.swap(buf);
  }
  return swaps;
}

template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq same) {
  std::int64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && same(i - 1, i)) {
      ++run;
    } else {
      total += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau_b: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("kendall_tau_b: need at least 2 observations");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t ties_x = tied_pairs(n, [&](auto a, auto b) { return xs[a] == xs[b]; });
  const std::int64_t ties_xy =
      tied_pairs(n, [&](auto a, auto b) { return xs[a] == xs[b] && ys[a] == ys[b]; });
  const std::int64_t swaps = count_inversions(ys);  // leaves ys sorted
  const std::int64_t ties_y = tied_pairs(n, [&](auto a, auto b) { return ys[a] == ys[b]; });

  const std::int64_t numer = n0 - ties_x - ties_y + ties_xy - 2 * swaps;
  const double denom =
      std::sqrt(static_cast<double>(n0 - ties_x)) * std::sqrt(static_cast<double>(n0 - ties_y));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(numer) / denom;
}

void validate(const PredictorConfig& config) {
  if (config.num_buckets < 1) throw ConfigError("predictor: num_buckets must be >= 1");
  if (config.max_len < 1) throw ConfigError("predictor: max_len must be >= 1");
  if (!(config.error_prob >= 0.0 && config.error_prob <= 1.0)) {
    throw ConfigError("predictor: error_prob must be in [0, 1]");
  }
  if (config.error_spread < 1) throw ConfigError("predictor: error_spread must be >= 1");
}

LengthPredictor make_predictor(const PredictorConfig& config, std::span<const Request> sample,
                               std::uint64_t seed) {
  validate(config);
  Bucketing bucketing = Bucketing::equal_width(config.num_buckets, config.max_len);
  if (config.strategy == BucketStrategy::EqualFrequency) {
    std::vector<int> lengths;
    lengths.reserve(sample.size());
    for (const auto& r : sample) lengths.push_back(r.true_output_len);
    if (lengths.empty()) lengths.push_back(1);
    bucketing = Bucketing::equal_frequency(config.num_buckets, config.max_len, lengths);
  }
  if (config.mode == PredictorMode::Oracle) return LengthPredictor::oracle(std::move(bucketing));
  return LengthPredictor(config.mode, std::move(bucketing), config.error_prob, config.error_spread,
                         seed);
}

}  // namespace slosim
