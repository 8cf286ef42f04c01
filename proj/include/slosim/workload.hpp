#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "slosim/core.hpp"

namespace slosim {

// Token-length distribution. Samples are rounded and clamped to >= 1.
class LengthDist {
 public:
  enum class Kind { LogNormal, Uniform, Empirical };

  static LengthDist lognormal(double mu, double sigma);
  static LengthDist uniform(int lo, int hi);
  static LengthDist empirical(std::vector<int> values);
  // One positive integer per line.
  static LengthDist empirical_file(const std::filesystem::path& path);

  int sample(std::mt19937_64& rng) const;
  double mean() const;

  Kind kind() const { return kind_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  const std::vector<int>& values() const { return values_; }

 private:
  LengthDist(Kind kind, double a, double b, std::vector<int> values);

  Kind kind_;
  double a_;
  double b_;
  std::vector<int> values_;
};

struct WorkloadSpec {
  double qps = 1.0;
  double duration = 60.0;  // seconds of arrivals
  std::uint64_t seed = 0;
  LengthDist prompt_len = LengthDist::lognormal(5.0, 1.0);
  LengthDist output_len = LengthDist::lognormal(5.0, 0.9);
  int max_prompt_len = 4096;
  int max_output_len = 2048;
  std::array<double, 6> category_weights{1, 1, 1, 1, 1, 1};
  SloCategoryTable slo_table = SloCategoryTable::llama8b();
};

// Requests ordered by non-decreasing arrival time.
using Trace = std::vector<Request>;

void validate(const WorkloadSpec& spec);
void validate_trace(const Trace& trace);

// Poisson arrivals at `qps` over [0, duration); categories drawn by weight.
Trace generate(const WorkloadSpec& spec);

// JSONL, one object per request:
// id, arrival_s, prompt_len, output_len, ttft_slo_s, tpot_slo_ms, category
Trace parse_trace(std::string_view text);
std::string format_trace(const Trace& trace);
Trace load_trace(const std::filesystem::path& path);
void save_trace(const Trace& trace, const std::filesystem::path& path);

// Divides every arrival time by `factor` (> 1 compresses, raising load).
Trace rescale_arrivals(Trace trace, double factor);

// Offered load of a trace: requests per second over its arrival span.
double trace_rate(const Trace& trace);

struct CsvColumnMap {
  std::string timestamp;
  std::string prompt;
  std::string output;
};

// Parses "timestamp=<col>,prompt=<col>,output=<col>".
CsvColumnMap parse_column_map(std::string_view text);

// Converts a (timestamp, prompt tokens, output tokens) CSV into a trace.
// Timestamps are numeric seconds or "YYYY-MM-DD HH:MM:SS[.frac]"; arrivals are
// re-based to the earliest row. Categories are drawn by weight under `seed`.
Trace convert_csv_trace(std::string_view csv_text, const CsvColumnMap& columns,
                        const SloCategoryTable& table, const std::array<double, 6>& weights,
                        std::uint64_t seed);

}  // namespace slosim
