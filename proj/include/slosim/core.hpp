#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slosim {

using RequestId = std::int64_t;

// Raised for malformed user input (configs, schemas, CLI usage). The CLI maps
// it to exit code 1; every other exception maps to 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One inference job. Times are simulation-clock seconds, lengths are tokens.
struct Request {
  RequestId id = 0;
  double arrival_time = 0.0;
  int prompt_len = 1;
  int true_output_len = 1;
  double ttft_slo = 0.0;
  double tpot_slo = 0.0;
  int category = 0;  // 1..6, 0 = uncategorized

  double ttft_deadline() const { return arrival_time + ttft_slo; }

  friend bool operator==(const Request&, const Request&) = default;
};

// Throws std::invalid_argument naming the first violated field.
void validate(const Request& request);

enum class RequestStatus {
  Completed,
  RejectedTtft,
  RejectedAdmission,
  // Still waiting or running when the horizon closed (or never admissible
  // after the last arrival). Counted in adherence, never compliant.
  Unfinished,
};

std::string_view to_string(RequestStatus status);
RequestStatus status_from_string(std::string_view text);

struct RequestOutcome {
  RequestId id = 0;
  RequestStatus status = RequestStatus::Unfinished;
  int category = 0;
  std::optional<double> first_token_time;
  std::optional<double> completion_time;
  std::optional<double> ttft;
  std::optional<double> tpot;  // mean inter-token latency after the first token
  bool slo_compliant = false;

  friend bool operator==(const RequestOutcome&, const RequestOutcome&) = default;
};

struct SloCategory {
  int id = 0;
  double ttft_slo = 0.0;  // seconds
  double tpot_slo = 0.0;  // seconds
};

class SloCategoryTable {
 public:
  SloCategoryTable() = default;
  explicit SloCategoryTable(std::vector<SloCategory> rows);

  // Six-category tables for the two reference model sizes.
  static SloCategoryTable llama8b();
  static SloCategoryTable gemma27b();
  static SloCategoryTable by_name(std::string_view name);

  const SloCategory& at(int category) const;
  const std::vector<SloCategory>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<SloCategory> rows_;
};

// (last_emit - first_token_time) / (n - 1); 0 for a single token.
double compute_tpot(double first_token_time, std::span<const double> token_emit_times);

// Inclusive on both thresholds; anything not Completed is non-compliant.
bool is_compliant(const Request& request, const RequestOutcome& outcome);

std::size_t count_compliant(std::span<const RequestOutcome> outcomes);

// Compliant completions per second over `horizon`.
double goodput(std::span<const RequestOutcome> outcomes, double horizon);

// Compliant fraction of every issued request, rejected ones included.
double adherence(std::span<const RequestOutcome> outcomes);

}  // namespace slosim
