#include "slosim/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "slosim/util.hpp"

namespace slosim {

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile: no values");
  if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile: p must be in (0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Percentiles percentiles(std::span<const double> values) {
  return {percentile(values, 50), percentile(values, 90), percentile(values, 99)};
}

RunReport summarize(std::span<const RequestOutcome> outcomes, double horizon) {
  RunReport r;
  r.total = outcomes.size();
  r.horizon = horizon;
  std::vector<double> ttfts;
  std::vector<double> tpots;
  std::vector<double> met;
  for (const auto& o : outcomes) {
    switch (o.status) {
      case RequestStatus::Completed:
        ++r.completed;
        break;
      case RequestStatus::RejectedTtft:
        ++r.rejected_ttft;
        break;
      case RequestStatus::RejectedAdmission:
        ++r.rejected_admission;
        break;
      case RequestStatus::Unfinished:
        ++r.unfinished;
        break;
    }
    auto& cat = r.per_category[o.category];
    ++cat.total;
    if (o.slo_compliant) {
      ++cat.compliant;
      met.push_back(o.completion_time.value_or(0.0));
    }
    if (o.ttft) ttfts.push_back(*o.ttft);
    if (o.status == RequestStatus::Completed && o.tpot) tpots.push_back(*o.tpot);
  }
  for (auto& [id, cat] : r.per_category) {
    cat.adherence = static_cast<double>(cat.compliant) / static_cast<double>(cat.total);
  }
  r.compliant = count_compliant(outcomes);
  r.goodput = goodput(outcomes, horizon);
  r.adherence = outcomes.empty() ? 0.0 : adherence(outcomes);
  if (!ttfts.empty()) r.ttft = percentiles(ttfts);
  if (!tpots.empty()) r.tpot = percentiles(tpots);

  std::sort(met.begin(), met.end());
  r.cumulative.emplace_back(0.0, 0);
  for (std::size_t i = 0; i < met.size(); ++i) r.cumulative.emplace_back(met[i], i + 1);
  if (r.cumulative.back().first < horizon) r.cumulative.emplace_back(horizon, met.size());
  return r;
}

RunReport summarize(std::span<const RequestOutcome> outcomes, double horizon,
                    std::span<const Request> trace) {
  RunReport r = summarize(outcomes, horizon);
  std::unordered_map<RequestId, const Request*> by_id;
  for (const auto& q : trace) by_id[q.id] = &q;
  for (const auto& o : outcomes) {
    if (o.status != RequestStatus::Completed) continue;
    const auto it = by_id.find(o.id);
    if (it == by_id.end()) throw std::invalid_argument("summarize: outcome without request");
    if (*o.ttft > it->second->ttft_slo) ++r.ttft_violations;
    if (*o.tpot > it->second->tpot_slo) ++r.tpot_violations;
  }
  return r;
}

namespace {

nlohmann::ordered_json percentiles_json(const std::optional<Percentiles>& p, double scale) {
  if (!p) return nullptr;
  return {{"p50", p->p50 * scale}, {"p90", p->p90 * scale}, {"p99", p->p99 * scale}};
}

}  // namespace

nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["total"] = r.total;
  j["completed"] = r.completed;
  j["compliant"] = r.compliant;
  j["rejected"] = {{"ttft", r.rejected_ttft}, {"admission", r.rejected_admission}};
  j["unfinished"] = r.unfinished;
  j["horizon_s"] = r.horizon;
  j["goodput_rps"] = r.goodput;
  j["adherence"] = r.adherence;
  auto cats = nlohmann::ordered_json::object();
  for (const auto& [id, c] : r.per_category) {
    cats[std::to_string(id)] = {
        {"total", c.total}, {"compliant", c.compliant}, {"adherence", c.adherence}};
  }
  j["per_category"] = cats;
  j["ttft_s"] = percentiles_json(r.ttft, 1.0);
  j["tpot_ms"] = percentiles_json(r.tpot, 1e3);
  j["violations"] = {{"ttft", r.ttft_violations}, {"tpot", r.tpot_violations}};
  return j;
}

std::string format_cumulative_csv(const RunReport& report) {
  std::string out = "time_s,slo_met\n";
  for (const auto& [t, k] : report.cumulative) {
    out += format_double(t) + "," + std::to_string(k) + "\n";
  }
  return out;
}

std::string format_table(const RunReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "requests     " << r.total << "\n";
  os << "completed    " << r.completed << "\n";
  os << "compliant    " << r.compliant << "\n";
  os << "rejected     ttft=" << r.rejected_ttft << " admission=" << r.rejected_admission << "\n";
  os << "unfinished   " << r.unfinished << "\n";
  os << "goodput      " << r.goodput << " req/s over " << r.horizon << " s\n";
  os << "adherence    " << r.adherence << "\n";
  if (r.ttft) {
    os << "ttft s       p50=" << r.ttft->p50 << " p90=" << r.ttft->p90 << " p99=" << r.ttft->p99
       << "\n";
  }
  if (r.tpot) {
    os << "tpot ms      p50=" << r.tpot->p50 * 1e3 << " p90=" << r.tpot->p90 * 1e3
       << " p99=" << r.tpot->p99 * 1e3 << "\n";
  }
  for (const auto& [id, c] : r.per_category) {
    os << "category " << id << "   " << c.compliant << "/" << c.total << " (" << c.adherence
       << ")\n";
  }
  return os.str();
}

RunOutput run_policy(const Trace& trace, const PolicyConfig& policy, const RunSetup& setup) {
  auto p = make_policy(policy, setup.cost);
  const auto predictor =
      make_predictor(setup.predictor, trace, derive_seed(setup.seed, "predictor"));
  RunOutput out;
  out.result = run(trace, *p, predictor, setup.cost, setup.sim);
  double horizon = setup.sim.horizon.value_or(out.result.end_time);
  if (!(horizon > 0.0)) horizon = 1.0;  // empty or instantaneous run
  out.report = summarize(out.result.outcomes, horizon, trace);
  return out;
}

namespace {

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const auto workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

const SweepCell& SweepReport::cell(double q, std::string_view policy) const {
  for (const auto& c : cells) {
    if (c.qps == q && c.policy == policy) return c;
  }
  throw std::out_of_range("sweep: no cell for policy " + std::string(policy));
}

Trace sweep_trace(const SweepInput& input, double qps, std::uint64_t seed) {
  if (!(qps > 0.0)) throw std::invalid_argument("sweep: qps must be > 0");
  if (const auto* spec = std::get_if<WorkloadSpec>(&input)) {
    WorkloadSpec s = *spec;
    s.qps = qps;
    s.seed = derive_seed(seed, "workload");
    return generate(s);
  }
  const auto& trace = std::get<Trace>(input);
  return rescale_arrivals(trace, qps / trace_rate(trace));
}

SweepReport sweep(const SweepInput& input, std::span<const double> qps_list,
                  std::span<const NamedPolicy> policies, const RunSetup& setup, int jobs) {
  if (qps_list.empty()) throw std::invalid_argument("sweep: no qps values");
  if (policies.empty()) throw std::invalid_argument("sweep: no policies");
  SweepReport report;
  report.qps.assign(qps_list.begin(), qps_list.end());
  for (const auto& p : policies) report.policies.push_back(p.name);

  std::vector<Trace> traces(qps_list.size());
  parallel_for(qps_list.size(), jobs,
               [&](std::size_t i) { traces[i] = sweep_trace(input, qps_list[i], setup.seed); });

  report.cells.resize(qps_list.size() * policies.size());
  parallel_for(report.cells.size(), jobs, [&](std::size_t k) {
    const std::size_t qi = k / policies.size();
    const std::size_t pi = k % policies.size();
    auto& cell = report.cells[k];
    cell.qps = qps_list[qi];
    cell.policy = policies[pi].name;
    cell.report = run_policy(traces[qi], policies[pi].config, setup).report;
  });

  for (std::size_t qi = 0; qi < qps_list.size(); ++qi) {
    for (std::size_t a = 0; a < policies.size(); ++a) {
      for (std::size_t b = 0; b < policies.size(); ++b) {
        if (a == b) continue;
        const auto& num = report.cells[qi * policies.size() + a];
        const auto& den = report.cells[qi * policies.size() + b];
        if (den.report.goodput > 0.0) {
          report.ratios.push_back(
              {qps_list[qi], num.policy, den.policy, num.report.goodput / den.report.goodput});
        }
      }
    }
  }
  return report;
}

nlohmann::ordered_json to_json(const SweepReport& report) {
  nlohmann::ordered_json j;
  j["qps"] = report.qps;
  j["policies"] = report.policies;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json cj;
    cj["qps"] = c.qps;
    cj["policy"] = c.policy;
    cj["report"] = to_json(c.report);
    cells.push_back(cj);
  }
  j["cells"] = cells;
  auto ratios = nlohmann::ordered_json::array();
  for (const auto& r : report.ratios) {
    ratios.push_back(
        {{"qps", r.qps}, {"numerator", r.numerator}, {"denominator", r.denominator},
         {"goodput_ratio", r.ratio}});
  }
  j["ratios"] = ratios;
  return j;
}

std::string format_goodput_csv(const SweepReport& report) {
  const bool has_greedy =
      std::find(report.policies.begin(), report.policies.end(), "greedy") != report.policies.end();
  std::string out =
      "qps,policy,goodput_rps,adherence,completed,rejected_ttft,rejected_admission,unfinished,"
      "goodput_ratio_vs_greedy\n";
  for (const auto& c : report.cells) {
    const auto& r = c.report;
    out += format_double(c.qps) + "," + c.policy + "," + format_double(r.goodput) + "," +
           format_double(r.adherence) + "," + std::to_string(r.completed) + "," +
           std::to_string(r.rejected_ttft) + "," + std::to_string(r.rejected_admission) + "," +
           std::to_string(r.unfinished) + ",";
    if (has_greedy) {
      const double g = report.cell(c.qps, "greedy").report.goodput;
      if (g > 0.0) out += format_double(r.goodput / g);
    }
    out += "\n";
  }
  return out;
}

std::vector<AblationCell> ablation(const Trace& trace, const PolicyConfig& base,
                                   const RunSetup& setup, int jobs) {
  std::vector<AblationCell> cells = {
      {"neither", false, false, {}},
      {"ttft_only", true, false, {}},
      {"tpot_only", false, true, {}},
      {"both", true, true, {}},
  };
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    PolicyConfig pc = base;
    pc.kind = PolicyKind::Scorpio;
    pc.scorpio.ttft_guard = cells[i].ttft_guard;
    pc.scorpio.tpot_guard = cells[i].tpot_guard;
    cells[i].report = run_policy(trace, pc, setup).report;
  });
  return cells;
}

std::string format_ablation_csv(std::span<const AblationCell> cells) {
  std::string out =
      "config,ttft_guard,tpot_guard,goodput_rps,adherence,ttft_violations,tpot_violations,"
      "rejected_ttft,rejected_admission\n";
  for (const auto& c : cells) {
    const auto& r = c.report;
    out += c.name + "," + (c.ttft_guard ? "1" : "0") + "," + (c.tpot_guard ? "1" : "0") + "," +
           format_double(r.goodput) + "," + format_double(r.adherence) + "," +
           std::to_string(r.ttft_violations) + "," + std::to_string(r.tpot_violations) + "," +
           std::to_string(r.rejected_ttft) + "," + std::to_string(r.rejected_admission) + "\n";
  }
  return out;
}

}  // namespace slosim
