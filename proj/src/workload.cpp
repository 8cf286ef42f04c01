#include "slosim/workload.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "slosim/util.hpp"

namespace slosim {

LengthDist::LengthDist(Kind kind, double a, double b, std::vector<int> values)
    : kind_(kind), a_(a), b_(b), values_(std::move(values)) {}

LengthDist LengthDist::lognormal(double mu, double sigma) {
  if (!std::isfinite(mu) || !(sigma > 0.0)) {
    throw std::invalid_argument("lognormal: requires finite mu and sigma > 0");
  }
  return LengthDist(Kind::LogNormal, mu, sigma, {});
}

LengthDist LengthDist::uniform(int lo, int hi) {
  if (lo < 1 || hi < lo) throw std::invalid_argument("uniform: requires 1 <= lo <= hi");
  return LengthDist(Kind::Uniform, lo, hi, {});
}

LengthDist LengthDist::empirical(std::vector<int> values) {
  if (values.empty()) throw std::invalid_argument("empirical: no values");
  for (int v : values) {
    if (v < 1) throw std::invalid_argument("empirical: lengths must be >= 1");
  }
  return LengthDist(Kind::Empirical, 0, 0, std::move(values));
}

LengthDist LengthDist::empirical_file(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<int> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    try {
      values.push_back(std::stoi(std::string(t)));
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": not an integer");
    }
  }
  return empirical(std::move(values));
}

int LengthDist::sample(std::mt19937_64& rng) const {
  switch (kind_) {
    case Kind::LogNormal: {
      const double v = std::lognormal_distribution<double>(a_, b_)(rng);
      return static_cast<int>(std::max(1.0, std::min(std::round(v), 1e9)));
    }
    case Kind::Uniform:
      return std::uniform_int_distribution<int>(static_cast<int>(a_), static_cast<int>(b_))(rng);
    case Kind::Empirical: {
      std::uniform_int_distribution<std::size_t> pick(0, values_.size() - 1);
      return values_[pick(rng)];
    }
  }
  return 1;
}

double LengthDist::mean() const {
  switch (kind_) {
    case Kind::LogNormal:
      return std::exp(a_ + b_ * b_ / 2.0);
    case Kind::Uniform:
      return (a_ + b_) / 2.0;
    case Kind::Empirical:
      return std::accumulate(values_.begin(), values_.end(), 0.0) /
             static_cast<double>(values_.size());
  }
  return 0.0;
}

void validate(const WorkloadSpec& spec) {
  if (!(spec.qps > 0.0)) throw std::invalid_argument("workload: qps must be > 0");
  if (!(spec.duration > 0.0)) throw std::invalid_argument("workload: duration must be > 0");
  if (spec.max_prompt_len < 1 || spec.max_output_len < 1) {
    throw std::invalid_argument("workload: max lengths must be >= 1");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < spec.category_weights.size(); ++i) {
    const double w = spec.category_weights[i];
    if (!(w >= 0.0)) throw std::invalid_argument("workload: category weights must be >= 0");
    if (w > 0.0) spec.slo_table.at(static_cast<int>(i) + 1);  // must be defined
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("workload: category weights sum to zero");
}

void validate_trace(const Trace& trace) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    validate(trace[i]);
    if (i > 0 && trace[i].arrival_time < trace[i - 1].arrival_time) {
      throw std::invalid_argument("trace: arrival times go backwards at request " +
                                  std::to_string(trace[i].id));
    }
  }
}

Trace generate(const WorkloadSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::exponential_distribution<double> gap(spec.qps);
  std::discrete_distribution<int> category(spec.category_weights.begin(),
                                           spec.category_weights.end());
  Trace trace;
  double t = 0.0;
  while (true) {
    t += gap(rng);
    if (t >= spec.duration) break;
    Request r;
    r.id = static_cast<RequestId>(trace.size());
    r.arrival_time = t;
    r.category = category(rng) + 1;
    r.prompt_len = std::min(spec.prompt_len.sample(rng), spec.max_prompt_len);
    r.true_output_len = std::min(spec.output_len.sample(rng), spec.max_output_len);
    const auto& slo = spec.slo_table.at(r.category);
    r.ttft_slo = slo.ttft_slo;
    r.tpot_slo = slo.tpot_slo;
    trace.push_back(r);
  }
  return trace;
}

namespace {

constexpr double kMs = 1e-3;

Request request_from_json(const nlohmann::json& j) {
  static const char* kFields[] = {"id",         "arrival_s",   "prompt_len", "output_len",
                                  "ttft_slo_s", "tpot_slo_ms"};
  for (const char* f : kFields) {
    if (!j.contains(f)) throw std::invalid_argument(std::string("missing field '") + f + "'");
  }
  Request r;
  r.id = j.at("id").get<RequestId>();
  r.arrival_time = j.at("arrival_s").get<double>();
  r.prompt_len = j.at("prompt_len").get<int>();
  r.true_output_len = j.at("output_len").get<int>();
  r.ttft_slo = j.at("ttft_slo_s").get<double>();
  r.tpot_slo = j.at("tpot_slo_ms").get<double>() * kMs;
  r.category = j.value("category", 0);
  validate(r);
  return r;
}

}  // namespace

Trace parse_trace(std::string_view text) {
  Trace trace;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      Request r = request_from_json(nlohmann::json::parse(line));
      if (!trace.empty() && r.arrival_time < trace.back().arrival_time) {
        throw std::invalid_argument("arrival_s goes backwards");
      }
      trace.push_back(r);
    } catch (const std::exception& e) {
      throw ConfigError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

std::string format_trace(const Trace& trace) {
  std::string out;
  for (const auto& r : trace) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["arrival_s"] = r.arrival_time;
    j["prompt_len"] = r.prompt_len;
    j["output_len"] = r.true_output_len;
    j["ttft_slo_s"] = r.ttft_slo;
    j["tpot_slo_ms"] = r.tpot_slo / kMs;
    j["category"] = r.category;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Trace load_trace(const std::filesystem::path& path) { return parse_trace(read_file(path)); }

void save_trace(const Trace& trace, const std::filesystem::path& path) {
  write_file(path, format_trace(trace));
}

Trace rescale_arrivals(Trace trace, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("rescale_arrivals: factor must be > 0");
  for (auto& r : trace) r.arrival_time /= factor;
  return trace;
}

double trace_rate(const Trace& trace) {
  if (trace.size() < 2) throw std::invalid_argument("trace_rate: need at least 2 requests");
  const double span = trace.back().arrival_time - trace.front().arrival_time;
  if (!(span > 0.0)) throw std::invalid_argument("trace_rate: all arrivals coincide");
  return static_cast<double>(trace.size()) / span;
}

CsvColumnMap parse_column_map(std::string_view text) {
  CsvColumnMap map;
  for (const auto& part : split(text, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("--map: expected key=column, got '" + part + "'");
    const std::string key(trim(std::string_view(part).substr(0, eq)));
    const std::string col(trim(std::string_view(part).substr(eq + 1)));
    if (key == "timestamp") {
      map.timestamp = col;
    } else if (key == "prompt") {
      map.prompt = col;
    } else if (key == "output") {
      map.output = col;
    } else {
      throw ConfigError("--map: unknown key '" + key + "'");
    }
  }
  if (map.timestamp.empty() || map.prompt.empty() || map.output.empty()) {
    throw ConfigError("--map: timestamp, prompt and output columns are all required");
  }
  return map;
}

namespace {

double parse_timestamp(const std::string& text) {
  std::size_t used = 0;
  try {
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double s = 0.0;
  if (std::sscanf(text.c_str(), "%d-%d-%d%*[ T]%d:%d:%lf", &y, &mo, &d, &h, &mi, &s) != 6) {
    throw std::invalid_argument("unparseable timestamp '" + text + "'");
  }
  using namespace std::chrono;
  const sys_days date = year{y} / month{static_cast<unsigned>(mo)} / day{static_cast<unsigned>(d)};
  return static_cast<double>(date.time_since_epoch().count()) * 86400.0 + h * 3600.0 + mi * 60.0 +
         s;
}

}  // namespace

Trace convert_csv_trace(std::string_view csv_text, const CsvColumnMap& columns,
                        const SloCategoryTable& table, const std::array<double, 6>& weights,
                        std::uint64_t seed) {
  std::istringstream in{std::string(csv_text)};
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> index;
  struct Row {
    double ts;
    int prompt;
    int output;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = parse_csv_line(line);
    if (index.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) index[fields[i]] = i;
      for (const auto* col : {&columns.timestamp, &columns.prompt, &columns.output}) {
        if (!index.contains(*col)) throw ConfigError("trace CSV: missing column '" + *col + "'");
      }
      continue;
    }
    try {
      auto at = [&](const std::string& col) -> const std::string& {
        const auto i = index.at(col);
        if (i >= fields.size()) throw std::invalid_argument("too few fields");
        return fields[i];
      };
      rows.push_back({parse_timestamp(at(columns.timestamp)),
                      std::max(1, std::stoi(at(columns.prompt))),
                      std::max(1, std::stoi(at(columns.output)))});
    } catch (const std::exception& e) {
      throw ConfigError("trace CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });

  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> category(weights.begin(), weights.end());
  Trace trace;
  for (const auto& row : rows) {
    Request r;
    r.id = static_cast<RequestId>(trace.size());
    r.arrival_time = row.ts - rows.front().ts;
    r.prompt_len = row.prompt;
    r.true_output_len = row.output;
    r.category = category(rng) + 1;
    const auto& slo = table.at(r.category);
    r.ttft_slo = slo.ttft_slo;
    r.tpot_slo = slo.tpot_slo;
    trace.push_back(r);
  }
  return trace;
}

}  // namespace slosim
