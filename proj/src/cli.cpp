#include "slosim/cli.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "slosim/config.hpp"
#include "slosim/costmodel.hpp"
#include "slosim/engine.hpp"
#include "slosim/report.hpp"
#include "slosim/util.hpp"

namespace slosim {

namespace {

using ojson = nlohmann::ordered_json;

struct RunFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string policy;
  std::string out_dir;
  bool log_decisions = false;
  int jobs = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_jobs) {
  cmd->add_option("--config", f.config, "run config (JSON)");
  cmd->add_option("--set", f.sets, "override a config key, e.g. --set policy.name=greedy");
  cmd->add_option("--policy", f.policy, "shorthand for --set policy.name=<policy>");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_flag("--log-decisions", f.log_decisions, "write decisions.jsonl");
  if (with_jobs) cmd->add_option("--jobs", f.jobs, "parallel cells")->check(CLI::PositiveNumber);
}

RunConfig resolve(const RunFlags& f) {
  nlohmann::json j = f.config.empty() ? nlohmann::json::object() : load_config_json(f.config);
  apply_env_seed(j);
  for (const auto& s : f.sets) apply_override(j, s);
  if (!f.policy.empty()) apply_override(j, "policy.name=\"" + f.policy + "\"");
  RunConfig c = parse_run_config(j);
  if (!f.out_dir.empty()) c.out_dir = f.out_dir;
  if (f.log_decisions) c.log_decisions = true;
  if (f.jobs > 0) c.jobs = f.jobs;
  return c;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ojson fit_json(const FitReport& r) {
  return {{"r2", r.r2}, {"rmse_ms", r.rmse * 1e3}, {"mape_pct", r.mape}};
}

void print_fit(std::ostream& out, std::string_view label, const FitReport& r) {
  out << label << ": r2=" << format_double(r.r2) << " rmse_ms=" << format_double(r.rmse * 1e3)
      << " mape_pct=" << format_double(r.mape) << "\n";
}

int cmd_fit(const std::string& profile, const std::string& out_path, double theta,
            const std::vector<double>& theta_sweep, double epsilon, std::ostream& out,
            std::ostream& err) {
  const auto samples = read_profile_csv(profile);
  std::vector<ProfileSample> decode;
  std::vector<ProfileSample> prefill;
  for (const auto& s : samples) (s.kind == SampleKind::Decode ? decode : prefill).push_back(s);
  if (decode.empty()) throw ConfigError(profile + ": no decode rows");

  const auto itl_fit = fit_itl(decode, epsilon);
  CostModel model = CostModel::reference();
  model.itl = itl_fit.params;
  ojson fit;
  fit["decode"] = fit_json(itl_fit.report);
  print_fit(out, "decode", itl_fit.report);

  if (prefill.empty()) {
    err << "slosim: no prefill rows, keeping the reference prefill parameters\n";
  } else if (!theta_sweep.empty()) {
    const auto sweep = sweep_theta(prefill, theta_sweep);
    model.prefill = sweep.best.params;
    fit["prefill"] = fit_json(sweep.best.report);
    auto rows = ojson::array();
    for (const auto& [t, rmse] : sweep.rmse_by_theta) {
      rows.push_back({{"theta", t}, {"rmse_ms", rmse * 1e3}});
    }
    fit["theta_sweep"] = rows;
    print_fit(out, "prefill", sweep.best.report);
    out << "theta: " << format_double(model.prefill.theta) << " (lowest rmse)\n";
  } else {
    const auto pf = fit_prefill(prefill, theta);
    model.prefill = pf.params;
    fit["prefill"] = fit_json(pf.report);
    print_fit(out, "prefill", pf.report);
  }
  nlohmann::json j = to_json(model);
  j["fit"] = fit;
  write_file(out_path, j.dump(2) + "\n");
  out << "wrote " << out_path << "\n";
  return 0;
}

int cmd_gen(const RunFlags& f, const std::string& out_path, std::ostream& out) {
  const RunConfig c = resolve(f);
  if (!c.workload) throw ConfigError("gen: config needs a workload block");
  const Trace trace = load_workload(c);
  save_trace(trace, out_path);
  std::map<int, std::size_t> mix;
  for (const auto& r : trace) ++mix[r.category];
  out << "requests " << trace.size() << "\n";
  for (const auto& [cat, n] : mix) out << "category " << cat << "  " << n << "\n";
  out << "wrote " << out_path << "\n";
  return 0;
}

int cmd_simulate(const RunFlags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  const Trace trace = load_workload(c);
  const RunOutput run = run_policy(trace, c.policy, make_setup(c));

  ojson report;
  report["policy"] = to_string(c.policy.kind);
  report["seed"] = c.seed;
  report["requests"] = trace.size();
  report["steps"] = run.result.log.step_count;
  report["end_time_s"] = run.result.end_time;
  report["report"] = to_json(run.report);
  write_file(c.out_dir / "outcomes.csv", format_outcomes_csv(run.result.outcomes));
  write_file(c.out_dir / "report.json", dump(report));
  write_file(c.out_dir / "fig5_cumulative.csv", format_cumulative_csv(run.report));
  if (c.log_decisions) {
    write_file(c.out_dir / "decisions.jsonl", format_decision_log(run.result.log));
  }

  out << "policy       " << to_string(c.policy.kind) << "\n" << format_table(run.report);
  const auto o = measure_overhead(run.result);
  out << std::fixed << std::setprecision(4) << "overhead     total_s=" << o.total_s
      << " schedule_s=" << o.schedule_s << " policy_s=" << o.policy_s
      << " overhead_pct=" << o.overhead_pct << "\n";
  out << "wrote " << c.out_dir.string() << "\n";
  return 0;
}

int cmd_compare(const RunFlags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  if (c.sweep_qps.empty()) throw ConfigError("compare: config needs sweep.qps");
  SweepInput input = c.workload ? SweepInput(*c.workload) : SweepInput(load_workload(c));
  const auto policies = sweep_policies(c);
  const SweepReport report = sweep(input, c.sweep_qps, policies, make_setup(c), c.jobs);
  write_file(c.out_dir / "fig4_goodput.csv", format_goodput_csv(report));
  write_file(c.out_dir / "sweep.json", dump(to_json(report)));

  out << std::left << std::setw(10) << "qps" << std::setw(14) << "policy" << std::setw(14)
      << "goodput" << "adherence\n";
  for (const auto& cell : report.cells) {
    out << std::setw(10) << format_double(cell.qps) << std::setw(14) << cell.policy
        << std::fixed << std::setprecision(4) << std::setw(14) << cell.report.goodput
        << cell.report.adherence << std::defaultfloat << "\n";
  }
  out << "wrote " << c.out_dir.string() << "\n";
  return 0;
}

int cmd_ablation(const RunFlags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  const Trace trace = load_workload(c);
  const auto cells = ablation(trace, c.policy, make_setup(c), c.jobs);
  write_file(c.out_dir / "fig6_ablation.csv", format_ablation_csv(cells));
  ojson j = ojson::array();
  for (const auto& cell : cells) {
    j.push_back({{"config", cell.name},
                 {"ttft_guard", cell.ttft_guard},
                 {"tpot_guard", cell.tpot_guard},
                 {"report", to_json(cell.report)}});
  }
  write_file(c.out_dir / "ablation.json", dump(j));
  for (const auto& cell : cells) {
    out << std::left << std::setw(12) << cell.name << "adherence=" << format_double(cell.report.adherence)
        << " ttft_violations=" << cell.report.ttft_violations
        << " tpot_violations=" << cell.report.tpot_violations << "\n";
  }
  out << "wrote " << c.out_dir.string() << "\n";
  return 0;
}

int cmd_eval_predictor(const RunFlags& f, const std::string& corpus, const std::string& out_path,
                       std::ostream& out) {
  const RunConfig c = resolve(f);
  const Trace requests = load_trace(corpus);
  if (requests.size() < 2) throw ConfigError("eval-predictor: corpus needs at least 2 requests");
  const auto predictor = make_predictor(c.predictor, requests, derive_seed(c.seed, "predictor"));
  const auto e = evaluate(predictor, requests);
  ojson j;
  j["count"] = e.count;
  j["exact_acc"] = e.exact_acc;
  j["off_by_1_acc"] = e.off_by_1_acc;
  j["off_by_2_acc"] = e.off_by_2_acc;
  j["kendall_tau"] = e.kendall_tau;
  j["rmse_tokens"] = e.rmse_tokens;
  const std::string text = dump(j);
  if (!out_path.empty()) write_file(out_path, text);
  out << text;
  return 0;
}

int cmd_convert(const std::string& csv, const std::string& map, const std::string& out_path,
                const std::string& table, const std::vector<double>& weights, std::uint64_t seed,
                std::ostream& out) {
  std::array<double, 6> w{1, 1, 1, 1, 1, 1};
  if (!weights.empty()) {
    if (weights.size() != 6) throw ConfigError("--weights: expected 6 values");
    std::copy(weights.begin(), weights.end(), w.begin());
  }
  const Trace trace = convert_csv_trace(read_file(csv), parse_column_map(map),
                                        SloCategoryTable::by_name(table), w,
                                        derive_seed(seed, "categories"));
  save_trace(trace, out_path);
  out << "requests " << trace.size() << "\nwrote " << out_path << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"slosim: discrete-event simulator for SLO-aware LLM serving"};
  app.require_subcommand(1);

  std::string profile, fit_out;
  double theta = kDefaultTheta;
  double epsilon = kDefaultEpsilon;
  std::vector<double> theta_sweep;
  auto* fit = app.add_subcommand("fit", "fit cost-model coefficients from a profile CSV");
  fit->add_option("--profile", profile, "profile CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", fit_out, "parameter JSON to write")->required();
  fit->add_option("--theta", theta, "prefill regime threshold (tokens)");
  fit->add_option("--theta-sweep", theta_sweep, "candidate thresholds")->delimiter(',');
  fit->add_option("--epsilon", epsilon, "inefficiency coefficient (>= 1)");

  RunFlags gen_flags, sim_flags, cmp_flags, abl_flags, eval_flags;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "generate a synthetic trace");
  add_run_flags(gen, gen_flags, false);
  gen->add_option("--out", gen_out, "trace JSONL to write")->required();

  auto* sim = app.add_subcommand("simulate", "run one simulation");
  add_run_flags(sim, sim_flags, false);
  auto* cmp = app.add_subcommand("compare", "QPS sweep across policies");
  add_run_flags(cmp, cmp_flags, true);
  auto* abl = app.add_subcommand("ablation", "SCORPIO guard ablation");
  add_run_flags(abl, abl_flags, true);

  std::string corpus, eval_out;
  auto* ev = app.add_subcommand("eval-predictor", "score the length predictor on a trace");
  add_run_flags(ev, eval_flags, false);
  ev->add_option("--corpus", corpus, "trace JSONL with true output lengths")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--out", eval_out, "metrics JSON to write");

  std::string csv, map, conv_out, table = "llama8b";
  std::vector<double> weights;
  std::uint64_t conv_seed = 0;
  auto* conv = app.add_subcommand("convert-trace", "convert a timestamped CSV into a trace");
  conv->add_option("--csv", csv, "input CSV")->required()->check(CLI::ExistingFile);
  conv->add_option("--map", map, "timestamp=<col>,prompt=<col>,output=<col>")->required();
  conv->add_option("--out", conv_out, "trace JSONL to write")->required();
  conv->add_option("--slo-table", table, "llama8b or gemma27b");
  conv->add_option("--weights", weights, "six category weights")->delimiter(',');
  conv->add_option("--seed", conv_seed, "category draw seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit) return cmd_fit(profile, fit_out, theta, theta_sweep, epsilon, out, err);
    if (*gen) return cmd_gen(gen_flags, gen_out, out);
    if (*sim) return cmd_simulate(sim_flags, out);
    if (*cmp) return cmd_compare(cmp_flags, out);
    if (*abl) return cmd_ablation(abl_flags, out);
    if (*ev) return cmd_eval_predictor(eval_flags, corpus, eval_out, out);
    if (*conv) return cmd_convert(csv, map, conv_out, table, weights, conv_seed, out);
  } catch (const ConfigError& e) {
    err << "slosim: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "slosim: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace slosim
