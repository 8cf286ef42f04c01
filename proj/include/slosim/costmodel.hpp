#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace slosim {

inline constexpr double kDefaultEpsilon = 1.1;
inline constexpr double kDefaultTheta = 128.0;

// Decode-step latency model, in seconds:
//   itl(B, L) = alpha*B*L + beta*B + gamma*L + delta
// epsilon (>= 1) inflates the batch-level TPOT estimate for system overheads.
struct ItlParams {
  double alpha = 0.0;  // s / (request * token)
  double beta = 0.0;   // s / request
  double gamma = 0.0;  // s / token
  double delta = 0.0;  // s
  double epsilon = kDefaultEpsilon;

  friend bool operator==(const ItlParams&, const ItlParams&) = default;
};

// Piecewise prefill latency: constant phi up to theta prompt tokens, affine
// above. The two regimes are not required to meet at theta.
struct PrefillParams {
  double phi = 0.0;              // s
  double theta = kDefaultTheta;  // tokens
  double alpha_p = 0.0;          // s / token
  double beta_p = 0.0;           // s

  friend bool operator==(const PrefillParams&, const PrefillParams&) = default;
};

struct CostModel {
  ItlParams itl;
  PrefillParams prefill;

  // Synthetic coefficients in the range of an 8B model on one A100-class GPU.
  static CostModel reference();

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

void validate(const ItlParams& params);
void validate(const PrefillParams& params);

double itl(const ItlParams& params, double batch_size, double avg_len);

// Batch-level TPOT over the next `predicted_len` steps if every member keeps
// decoding that long: eps * ((alpha*vbs + gamma) * (L + P/2) + beta*vbs + delta).
double estimated_tpot(const ItlParams& params, double vbs, double avg_len, double predicted_len);

double prefill_time(const PrefillParams& params, int prompt_len);

// Lower bound on TTFT: elapsed wait plus the prefill of everything ahead in the
// queue. `queue_ahead` ends with the request's own prompt.
double estimated_ttft(const PrefillParams& params, std::span<const int> queue_ahead,
                      double elapsed_wait);

enum class SampleKind { Decode, Prefill };

struct ProfileSample {
  SampleKind kind = SampleKind::Decode;
  double batch_size = 1.0;
  double avg_seq_len = 0.0;
  int prompt_len = 0;       // prefill samples only
  double observed_latency;  // seconds
};

struct FitReport {
  double r2 = 0.0;
  double rmse = 0.0;  // seconds
  double mape = 0.0;  // percent
};

// r2 = 1 - SS_res/SS_tot, rmse = sqrt(mean sq err), mape = mean |p-o|/o * 100.
// A constant observed series has r2 = 1 when matched exactly, else 0.
FitReport fit_quality(std::span<const double> predicted, std::span<const double> observed);

struct ItlFit {
  ItlParams params;
  FitReport report;
};

// OLS over {B*L, B, L, 1}. epsilon is passed through, not fitted.
ItlFit fit_itl(std::span<const ProfileSample> samples, double epsilon = kDefaultEpsilon);

struct PrefillFit {
  PrefillParams params;
  FitReport report;
};

// phi = mean latency at or below theta; (alpha_p, beta_p) = OLS above theta.
PrefillFit fit_prefill(std::span<const ProfileSample> samples, double theta = kDefaultTheta);

struct ThetaSweep {
  PrefillFit best;
  std::vector<std::pair<double, double>> rmse_by_theta;  // candidates that could be fitted
};

// Refits per candidate and keeps the lowest RMSE (ties go to the smaller theta).
ThetaSweep sweep_theta(std::span<const ProfileSample> samples, std::span<const double> candidates);

// Requests/second the model sustains at the largest batch whose ITL stays
// within `tpot_budget`, for a mean prompt/output shape. Capped at max_batch.
double sustainable_rate(const CostModel& model, double mean_prompt, double mean_output,
                        double tpot_budget, int max_batch);

// Profile CSV: kind,batch_size,avg_seq_len,prompt_len,latency_ms
std::vector<ProfileSample> parse_profile_csv(std::string_view text);
std::vector<ProfileSample> read_profile_csv(const std::filesystem::path& path);
std::string format_profile_csv(std::span<const ProfileSample> samples);

// JSON in milliseconds and tokens with keys
// alpha,beta,gamma,delta,epsilon,phi,theta,alpha_p,beta_p.
nlohmann::json to_json(const CostModel& model);
CostModel cost_model_from_json(const nlohmann::json& j);
CostModel load_cost_model(const std::filesystem::path& path);

}  // namespace slosim
