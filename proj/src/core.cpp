#include "slosim/core.hpp"

#include <algorithm>
#include <set>

namespace slosim {

void validate(const Request& request) {
  const auto fail = [&](const char* what) {
    throw std::invalid_argument("request " + std::to_string(request.id) + ": " + what);
  };
  if (request.prompt_len < 1) fail("prompt_len must be >= 1");
  if (request.true_output_len < 1) fail("output_len must be >= 1");
  if (!(request.ttft_slo > 0.0)) fail("ttft_slo must be > 0");
  if (!(request.tpot_slo > 0.0)) fail("tpot_slo must be > 0");
  if (request.arrival_time < 0.0) fail("arrival_time must be >= 0");
}

std::string_view to_string(RequestStatus status) {
  switch (status) {
    case RequestStatus::Completed:
      return "completed";
    case RequestStatus::RejectedTtft:
      return "rejected_ttft";
    case RequestStatus::RejectedAdmission:
      return "rejected_admission";
    case RequestStatus::Unfinished:
      return "unfinished";
  }
  return "unknown";
}

RequestStatus status_from_string(std::string_view text) {
  for (auto s : {RequestStatus::Completed, RequestStatus::RejectedTtft,
                 RequestStatus::RejectedAdmission, RequestStatus::Unfinished}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown request status '" + std::string(text) + "'");
}

SloCategoryTable::SloCategoryTable(std::vector<SloCategory> rows) : rows_(std::move(rows)) {
  std::set<int> seen;
  for (const auto& row : rows_) {
    if (!(row.ttft_slo > 0.0) || !(row.tpot_slo > 0.0)) {
      throw std::invalid_argument("SLO category " + std::to_string(row.id) +
                                  ": thresholds must be positive");
    }
    if (!seen.insert(row.id).second) {
      throw std::invalid_argument("duplicate SLO category id " + std::to_string(row.id));
    }
  }
}

SloCategoryTable SloCategoryTable::llama8b() {
  return SloCategoryTable({{1, 0.5, 0.030},
                           {2, 2.0, 0.030},
                           {3, 3.0, 0.030},
                           {4, 0.5, 0.050},
                           {5, 1.0, 0.050},
                           {6, 7.5, 0.050}});
}

SloCategoryTable SloCategoryTable::gemma27b() {
  return SloCategoryTable({{1, 1.0, 0.060},
                           {2, 4.0, 0.060},
                           {3, 6.0, 0.060},
                           {4, 1.0, 0.100},
                           {5, 2.0, 0.100},
                           {6, 15.0, 0.100}});
}

SloCategoryTable SloCategoryTable::by_name(std::string_view name) {
  if (name == "llama8b") return llama8b();
  if (name == "gemma27b") return gemma27b();
  throw ConfigError("unknown SLO table '" + std::string(name) + "' (expected llama8b or gemma27b)");
}

const SloCategory& SloCategoryTable::at(int category) const {
  auto it = std::find_if(rows_.begin(), rows_.end(),
                         [&](const SloCategory& row) { return row.id == category; });
  if (it == rows_.end()) {
    throw std::out_of_range("no SLO category " + std::to_string(category));
  }
  return *it;
}

double compute_tpot(double first_token_time, std::span<const double> token_emit_times) {
  if (token_emit_times.empty()) {
    throw std::invalid_argument("compute_tpot: no tokens generated");
  }
  if (token_emit_times.size() == 1) return 0.0;
  const double span = token_emit_times.back() - first_token_time;
  return span / static_cast<double>(token_emit_times.size() - 1);
}

bool is_compliant(const Request& request, const RequestOutcome& outcome) {
  if (outcome.status != RequestStatus::Completed) return false;
  if (!outcome.ttft || !outcome.tpot) return false;
  return *outcome.ttft <= request.ttft_slo && *outcome.tpot <= request.tpot_slo;
}

std::size_t count_compliant(std::span<const RequestOutcome> outcomes) {
  return static_cast<std::size_t>(std::count_if(
      outcomes.begin(), outcomes.end(), [](const RequestOutcome& o) { return o.slo_compliant; }));
}

double goodput(std::span<const RequestOutcome> outcomes, double horizon) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("goodput: horizon must be > 0");
  }
  return static_cast<double>(count_compliant(outcomes)) / horizon;
}

double adherence(std::span<const RequestOutcome> outcomes) {
  if (outcomes.empty()) {
    throw std::invalid_argument("adherence: no requests");
  }
  return static_cast<double>(count_compliant(outcomes)) / static_cast<double>(outcomes.size());
}

}  // namespace slosim
