#include "slosim/costmodel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "slosim/core.hpp"
#include "slosim/util.hpp"

namespace slosim {

namespace {

constexpr double kMs = 1e-3;

// Least squares with column equilibration; returns nullopt-like empty vector on
// rank deficiency.
Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                    bool* full_rank) {
  Eigen::VectorXd scale = design.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (scale(i) == 0.0) scale(i) = 1.0;
  }
  const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  *full_rank = qr.rank() == design.cols();
  if (!*full_rank) return {};
  return qr.solve(y).cwiseQuotient(scale);
}

double parse_number(const std::string& field, const char* column, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("profile CSV line " + std::to_string(line) + ": column '" + column +
                      "' is not a number: '" + field + "'");
  }
}

}  // namespace

CostModel CostModel::reference() {
  CostModel m;
  m.itl = {.alpha = 5e-5 * kMs, .beta = 0.15 * kMs, .gamma = 0.002 * kMs, .delta = 10.0 * kMs,
           .epsilon = 1.8};
  // epsilon above the 1.1 default: under load roughly a third of engine time
  // goes to prefills interleaved with decode, which the TPOT estimate omits.
  m.prefill = {.phi = 15.0 * kMs, .theta = kDefaultTheta, .alpha_p = 0.05 * kMs,
               .beta_p = 10.0 * kMs};
  return m;
}

void validate(const ItlParams& params) {
  if (!(params.epsilon >= 1.0)) {
    throw std::invalid_argument("ItlParams: epsilon must be >= 1");
  }
  for (double v : {params.alpha, params.beta, params.gamma, params.delta}) {
    if (!std::isfinite(v)) throw std::invalid_argument("ItlParams: coefficients must be finite");
  }
}

void validate(const PrefillParams& params) {
  if (!(params.phi > 0.0)) throw std::invalid_argument("PrefillParams: phi must be > 0");
  if (!(params.theta >= 0.0)) throw std::invalid_argument("PrefillParams: theta must be >= 0");
  if (params.alpha_p * params.theta + params.beta_p < 0.0) {
    throw std::invalid_argument("PrefillParams: alpha_p*theta + beta_p must be >= 0");
  }
}

double itl(const ItlParams& p, double batch_size, double avg_len) {
  if (!(batch_size > 0.0) || !(avg_len > 0.0)) {
    throw std::invalid_argument("itl: batch size and average length must be positive");
  }
  return p.alpha * batch_size * avg_len + p.beta * batch_size + p.gamma * avg_len + p.delta;
}

double estimated_tpot(const ItlParams& p, double vbs, double avg_len, double predicted_len) {
  if (!(vbs > 0.0) || !(avg_len > 0.0) || !(predicted_len >= 1.0)) {
    throw std::invalid_argument(
        "estimated_tpot: requires vbs > 0, avg_len > 0, predicted_len >= 1");
  }
  return p.epsilon *
         ((p.alpha * vbs + p.gamma) * (avg_len + predicted_len / 2.0) + p.beta * vbs + p.delta);
}

double prefill_time(const PrefillParams& p, int prompt_len) {
  if (prompt_len < 1) throw std::invalid_argument("prefill_time: prompt_len must be >= 1");
  if (static_cast<double>(prompt_len) <= p.theta) return p.phi;
  return p.alpha_p * prompt_len + p.beta_p;
}

double estimated_ttft(const PrefillParams& p, std::span<const int> queue_ahead,
                      double elapsed_wait) {
  if (queue_ahead.empty()) {
    throw std::invalid_argument("estimated_ttft: queue must contain the request itself");
  }
  double total = elapsed_wait;
  for (int len : queue_ahead) total += prefill_time(p, len);
  return total;
}

FitReport fit_quality(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size() || observed.empty()) {
    throw std::invalid_argument("fit_quality: series must be non-empty and equal length");
  }
  const double n = static_cast<double>(observed.size());
  double mean = 0.0;
  for (double o : observed) mean += o;
  mean /= n;

  double ss_res = 0.0, ss_tot = 0.0, ape = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] == 0.0) {
      throw std::invalid_argument("fit_quality: observed value is zero, MAPE undefined");
    }
    const double err = predicted[i] - observed[i];
    ss_res += err * err;
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
    ape += std::abs(err) / std::abs(observed[i]);
  }
  FitReport r;
  r.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  r.rmse = std::sqrt(ss_res / n);
  r.mape = ape / n * 100.0;
  return r;
}

ItlFit fit_itl(std::span<const ProfileSample> samples, double epsilon) {
  std::set<double> batch_sizes, lengths;
  for (const auto& s : samples) {
    if (s.kind != SampleKind::Decode) {
      throw std::invalid_argument("fit_itl: prefill sample passed to decode fit");
    }
    batch_sizes.insert(s.batch_size);
    lengths.insert(s.avg_seq_len);
  }
  if (samples.size() < 4) {
    throw std::invalid_argument("fit_itl: rank deficient, need at least 4 samples (got " +
                                std::to_string(samples.size()) + ")");
  }
  if (batch_sizes.size() < 2) {
    throw std::invalid_argument("fit_itl: rank deficient, batch size never varies");
  }
  if (lengths.size() < 2) {
    throw std::invalid_argument("fit_itl: rank deficient, sequence length never varies");
  }

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    design(i, 0) = s.batch_size * s.avg_seq_len;
    design(i, 1) = s.batch_size;
    design(i, 2) = s.avg_seq_len;
    design(i, 3) = 1.0;
    y(i) = s.observed_latency;
  }
  bool full_rank = false;
  const Eigen::VectorXd coef = solve_least_squares(design, y, &full_rank);
  if (!full_rank) {
    throw std::invalid_argument(
        "fit_itl: rank deficient, batch size and length do not vary independently "
        "(the B*L interaction is not identifiable)");
  }

  ItlFit fit;
  fit.params = {coef(0), coef(1), coef(2), coef(3), epsilon};
  std::vector<double> predicted, observed;
  for (const auto& s : samples) {
    predicted.push_back(itl(fit.params, s.batch_size, s.avg_seq_len));
    observed.push_back(s.observed_latency);
  }
  fit.report = fit_quality(predicted, observed);
  return fit;
}

PrefillFit fit_prefill(std::span<const ProfileSample> samples, double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("fit_prefill: theta must be >= 0");
  double const_sum = 0.0;
  std::size_t const_count = 0;
  std::vector<const ProfileSample*> linear;
  std::set<int> linear_lengths;
  for (const auto& s : samples) {
    if (s.kind != SampleKind::Prefill) {
      throw std::invalid_argument("fit_prefill: decode sample passed to prefill fit");
    }
    if (s.prompt_len < 1) throw std::invalid_argument("fit_prefill: prompt_len must be >= 1");
    if (static_cast<double>(s.prompt_len) <= theta) {
      const_sum += s.observed_latency;
      ++const_count;
    } else {
      linear.push_back(&s);
      linear_lengths.insert(s.prompt_len);
    }
  }
  if (const_count == 0) {
    throw std::invalid_argument("fit_prefill: no samples at or below theta=" +
                                format_double(theta) + ", phi is undefined");
  }
  const double phi = const_sum / static_cast<double>(const_count);
  if (linear_lengths.size() < 2) {
    throw std::invalid_argument(
        "fit_prefill: need samples at >= 2 distinct prompt lengths above theta=" +
        format_double(theta) + " for the linear regime (phi=" + format_double(phi / kMs) +
        " ms from " + std::to_string(const_count) + " samples)");
  }

  const auto n = static_cast<Eigen::Index>(linear.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = linear[static_cast<std::size_t>(i)]->prompt_len;
    design(i, 1) = 1.0;
    y(i) = linear[static_cast<std::size_t>(i)]->observed_latency;
  }
  bool full_rank = false;
  const Eigen::VectorXd coef = solve_least_squares(design, y, &full_rank);
  if (!full_rank) throw std::invalid_argument("fit_prefill: linear regime is rank deficient");

  PrefillFit fit;
  fit.params = {phi, theta, coef(0), coef(1)};
  std::vector<double> predicted, observed;
  for (const auto& s : samples) {
    predicted.push_back(prefill_time(fit.params, s.prompt_len));
    observed.push_back(s.observed_latency);
  }
  fit.report = fit_quality(predicted, observed);
  return fit;
}

ThetaSweep sweep_theta(std::span<const ProfileSample> samples, std::span<const double> candidates) {
  ThetaSweep sweep;
  bool found = false;
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  for (double theta : sorted) {
    PrefillFit fit;
    try {
      fit = fit_prefill(samples, theta);
    } catch (const std::invalid_argument&) {
      continue;
    }
    sweep.rmse_by_theta.emplace_back(theta, fit.report.rmse);
    if (!found || fit.report.rmse < sweep.best.report.rmse) {
      sweep.best = fit;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("sweep_theta: no candidate theta could be fitted");
  return sweep;
}

double sustainable_rate(const CostModel& model, double mean_prompt, double mean_output,
                        double tpot_budget, int max_batch) {
  if (!(mean_prompt >= 1.0) || !(mean_output >= 1.0) || max_batch < 1) {
    throw std::invalid_argument("sustainable_rate: invalid workload shape");
  }
  const double avg_len = mean_prompt + mean_output / 2.0;
  int batch = 1;
  for (int b = 1; b <= max_batch; ++b) {
    if (itl(model.itl, b, avg_len) > tpot_budget) break;
    batch = b;
  }
  const double prefill =
      prefill_time(model.prefill, static_cast<int>(std::lround(mean_prompt)));
  const double decode_share = mean_output * itl(model.itl, batch, avg_len) / batch;
  return 1.0 / (prefill + decode_share);
}

std::vector<ProfileSample> parse_profile_csv(std::string_view text) {
  static const char* kColumns[] = {"kind", "batch_size", "avg_seq_len", "prompt_len",
                                   "latency_ms"};
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> index;
  std::vector<ProfileSample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = parse_csv_line(line);
    if (index.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) index[fields[i]] = i;
      for (const char* col : kColumns) {
        if (!index.contains(col)) {
          throw ConfigError(std::string("profile CSV: missing column '") + col + "'");
        }
      }
      continue;
    }
    auto field = [&](const char* col) -> const std::string& {
      const auto i = index.at(col);
      if (i >= fields.size()) {
        throw ConfigError("profile CSV line " + std::to_string(line_no) + ": too few fields");
      }
      return fields[i];
    };
    ProfileSample s;
    const std::string& kind = field("kind");
    if (kind == "decode") {
      s.kind = SampleKind::Decode;
      s.batch_size = parse_number(field("batch_size"), "batch_size", line_no);
      s.avg_seq_len = parse_number(field("avg_seq_len"), "avg_seq_len", line_no);
    } else if (kind == "prefill") {
      s.kind = SampleKind::Prefill;
      s.prompt_len = static_cast<int>(parse_number(field("prompt_len"), "prompt_len", line_no));
      s.batch_size = field("batch_size").empty()
                         ? 1.0
                         : parse_number(field("batch_size"), "batch_size", line_no);
      s.avg_seq_len = field("avg_seq_len").empty()
                          ? s.prompt_len
                          : parse_number(field("avg_seq_len"), "avg_seq_len", line_no);
    } else {
      throw ConfigError("profile CSV line " + std::to_string(line_no) + ": unknown kind '" +
                        kind + "'");
    }
    s.observed_latency = parse_number(field("latency_ms"), "latency_ms", line_no) * kMs;
    if (!(s.observed_latency > 0.0) || !(s.batch_size >= 1.0)) {
      throw ConfigError("profile CSV line " + std::to_string(line_no) +
                        ": latency must be > 0 and batch_size >= 1");
    }
    samples.push_back(s);
  }
  if (index.empty()) throw ConfigError("profile CSV: missing header");
  return samples;
}

std::vector<ProfileSample> read_profile_csv(const std::filesystem::path& path) {
  return parse_profile_csv(read_file(path));
}

std::string format_profile_csv(std::span<const ProfileSample> samples) {
  std::string out = "kind,batch_size,avg_seq_len,prompt_len,latency_ms\n";
  for (const auto& s : samples) {
    if (s.kind == SampleKind::Decode) {
      out += "decode," + format_double(s.batch_size) + "," + format_double(s.avg_seq_len) + ",,";
    } else {
      out += "prefill," + format_double(s.batch_size) + "," + format_double(s.avg_seq_len) + "," +
             std::to_string(s.prompt_len) + ",";
    }
    out += format_double(s.observed_latency / kMs) + "\n";
  }
  return out;
}

nlohmann::json to_json(const CostModel& m) {
  return nlohmann::json{
      {"alpha", m.itl.alpha / kMs},
      {"beta", m.itl.beta / kMs},
      {"gamma", m.itl.gamma / kMs},
      {"delta", m.itl.delta / kMs},
      {"epsilon", m.itl.epsilon},
      {"phi", m.prefill.phi / kMs},
      {"theta", m.prefill.theta},
      {"alpha_p", m.prefill.alpha_p / kMs},
      {"beta_p", m.prefill.beta_p / kMs},
      {"units",
       {{"alpha", "ms/(request*token)"},
        {"beta", "ms/request"},
        {"gamma", "ms/token"},
        {"delta", "ms"},
        {"epsilon", "dimensionless"},
        {"phi", "ms"},
        {"theta", "tokens"},
        {"alpha_p", "ms/token"},
        {"beta_p", "ms"}}},
  };
}

CostModel cost_model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("cost model must be a JSON object");
  static const std::set<std::string> kKnown = {"alpha", "beta",    "gamma",  "delta",
                                               "epsilon", "phi",   "theta",  "alpha_p",
                                               "beta_p",  "units", "fit"};
  for (const auto& [key, _] : j.items()) {
    if (!kKnown.contains(key)) throw ConfigError("cost model: unknown key '" + key + "'");
  }
  const CostModel defaults = CostModel::reference();
  auto get = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(std::string("cost model: '") + key + "' must be a number");
    return j.at(key).get<double>();
  };
  CostModel m;
  m.itl.alpha = get("alpha", defaults.itl.alpha / kMs) * kMs;
  m.itl.beta = get("beta", defaults.itl.beta / kMs) * kMs;
  m.itl.gamma = get("gamma", defaults.itl.gamma / kMs) * kMs;
  m.itl.delta = get("delta", defaults.itl.delta / kMs) * kMs;
  m.itl.epsilon = get("epsilon", defaults.itl.epsilon);
  m.prefill.phi = get("phi", defaults.prefill.phi / kMs) * kMs;
  m.prefill.theta = get("theta", defaults.prefill.theta);
  m.prefill.alpha_p = get("alpha_p", defaults.prefill.alpha_p / kMs) * kMs;
  m.prefill.beta_p = get("beta_p", defaults.prefill.beta_p / kMs) * kMs;
  try {
    validate(m.itl);
    validate(m.prefill);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

CostModel load_cost_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return cost_model_from_json(j);
}

}  // namespace slosim
