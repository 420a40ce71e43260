// dal: estimate abscissas, evaluate criteria, run experiments and sweeps.
// Exit codes: 0 ok, 1 usage/config error, 2 runtime/IO error, 3 a
// reconciliation came out Tension.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dal/experiment.hpp"
#include "dal/report_io.hpp"

namespace {

using namespace dal;

constexpr int kOk = 0, kUsage = 1, kRuntime = 2, kTension = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> k;
  std::optional<std::size_t> trials;
  std::string format = "text";
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
  if (config_required) opt->required();
  sub->add_option("--seed", c.seed, "override master_seed");
  sub->add_option("--out", c.out, "output directory (overrides outputs.dir)");
  sub->add_option("--k", c.k, "override truncation K");
  sub->add_option("--trials", c.trials, "override trial count");
  sub->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"text", "json", "csv"}));
}

ExperimentConfig load(const Common& c) {
  if (c.config.empty()) throw ConfigError("--config is required");
  auto cfg = load_config(c.config);
  if (c.seed) cfg.master_seed = *c.seed;
  if (c.k) cfg.K = *c.k;
  if (c.trials) cfg.trials = *c.trials;
  if (!c.out.empty()) cfg.out_dir = c.out;
  validate(cfg);
  return cfg;
}

std::string fmt(double v) { return format_ext(v); }

void print_trial_table(const TrialRecord& t) {
  std::printf("%-12s %s\n", "statistic", "estimate");
  std::printf("%-12s %s\n", "sigma_abs", fmt(t.sigma_abs).c_str());
  std::printf("%-12s %s\n", "sigma_conv", fmt(t.sigma_conv).c_str());
  std::printf("%-12s %s  (%s)\n", "alpha0", fmt(t.alpha0).c_str(), t.trend_alpha0.c_str());
  std::printf("%-12s %s\n", "tau", fmt(t.tau).c_str());
  std::printf("%-12s %s\n", "h", fmt(t.h).c_str());
  for (const auto& e : t.errors) std::printf("error: %s\n", e.c_str());
}

void print_criteria(const std::vector<CriterionReport>& cs) {
  for (const auto& c : cs) {
    std::printf("%-8s rho=%-10s %-22s %-12s %-26s S_K=%s\n", to_string(c.id), fmt(c.rho).c_str(),
                c.eps_policy.c_str(), to_string(c.verdict.cls), to_string(c.implied_bound),
                fmt(c.partial_sum_at_K()).c_str());
    for (const auto& n : c.notes) std::printf("         note: %s\n", n.c_str());
  }
}

void print_reconciliation(const ExperimentReport& r) {
  for (const auto& e : r.reconciliation)
    std::printf("%-8s rho=%-10s %-26s %-12s satisfied=%s violated=%s\n", to_string(e.criterion),
                fmt(e.rho).c_str(), to_string(e.implied_bound), to_string(e.status),
                fmt(e.satisfied_fraction).c_str(), fmt(e.violated_fraction).c_str());
}

void print_summary(const ExperimentReport& r) {
  auto row = [](const char* name, const Aggregate& a) {
    std::printf("%-12s median=%-12s iqr=%-12s min=%-12s max=%-12s at_sentinel=%s\n", name, fmt(a.median).c_str(),
                fmt(a.iqr).c_str(), fmt(a.min).c_str(), fmt(a.max).c_str(), fmt(a.fraction_at_sentinel).c_str());
  };
  std::printf("trials: %zu\n", r.trials.size());
  row("sigma_abs", r.agg_sigma_abs);
  row("sigma_conv", r.agg_sigma_conv);
  row("alpha0", r.agg_alpha0);
  row("tau", r.agg_tau);
  row("h", r.agg_h);
  if (r.coef_condition_holds)
    std::printf("coefficient condition: %s\n", *r.coef_condition_holds ? "holds" : "does not hold");
  if (!r.criteria.empty()) {
    std::printf("\ncriteria\n");
    print_criteria(r.criteria);
    std::printf("\nreconciliation\n");
    print_reconciliation(r);
  }
}

void emit_report(const ExperimentReport& r, const std::string& format) {
  if (format == "json")
    std::cout << dump_report(r);
  else if (format == "csv")
    std::cout << trials_csv(r.trials);
  else
    print_summary(r);
}

int cmd_estimate(const Common& c, std::size_t trial) {
  const auto cfg = load(c);
  const auto t = run_trial(cfg, trial);
  if (c.format == "json")
    std::cout << trial_to_json(t).dump(2) << "\n";
  else if (c.format == "csv")
    std::cout << trials_csv({t});
  else
    print_trial_table(t);
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    write_file(std::filesystem::path(c.out) / "trials.csv", trials_csv({t}));
    write_file(std::filesystem::path(c.out) / "traces.csv", traces_csv({t}));
  }
  return kOk;
}

struct CriterionArgs {
  std::string id;
  std::optional<double> rho, eps, E;
  std::string schedule, delta, law;
};

int cmd_criterion(const Common& c, const CriterionArgs& a) {
  auto cfg = load(c);
  CriterionSpec s;
  try {
    s.id = criterion_from_string(a.id);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  s.rho = a.rho;
  s.eps = a.eps;
  s.E = a.E;
  if (!a.schedule.empty()) s.schedule = a.schedule;
  if (!a.delta.empty()) s.delta = a.delta;
  if (!a.law.empty()) {
    try {
      s.law = json::parse(a.law);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("--law: ") + e.what());
    }
  }
  cfg.criteria = {s};
  validate(cfg);
  bool monotone = false;
  if (s.id == CriterionId::Cor4) {
    std::vector<std::size_t> idx(cfg.trials);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto trials = run_trials(cfg, idx);
    monotone = std::all_of(trials.begin(), trials.end(), [](const TrialRecord& t) { return t.monotone; });
  }
  const auto reps = evaluate_criterion(cfg, s, monotone);
  if (reps.empty()) throw ConfigError(a.id + ": no rho in range (pass --rho or set rho_grid)");
  if (c.format == "json") {
    json arr = json::array();
    for (const auto& r : reps) arr.push_back(criterion_to_json(r));
    std::cout << arr.dump(2) << "\n";
  } else if (c.format == "csv") {
    std::cout << criteria_csv(reps);
  } else {
    print_criteria(reps);
  }
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    write_file(std::filesystem::path(c.out) / "criteria.csv", criteria_csv(reps));
    write_file(std::filesystem::path(c.out) / "partial_sums.csv", partial_sums_csv(reps));
  }
  return kOk;
}

int cmd_experiment(const Common& c) {
  const auto cfg = load(c);
  const auto rep = run_experiment(cfg);
  if (!cfg.out_dir.empty()) persist_report(rep, cfg.out_dir);
  emit_report(rep, c.format);
  if (rep.any_tension()) {
    std::cerr << "dal: reconciliation reports Tension\n";
    return kTension;
  }
  return kOk;
}

std::string sweep_csv(const SweepTable& t) {
  std::ostringstream o;
  o << "criterion,rho,eps_policy,verdict,implied_bound,reconciliation\n";
  for (const auto& r : t.rows)
    o << to_string(r.criterion) << ',' << format_ext(r.rho) << ',' << r.eps_policy << ',' << to_string(r.verdict)
      << ',' << to_string(r.implied_bound) << ',' << to_string(r.status) << "\n";
  return o.str();
}

int cmd_sweep(const Common& c, const std::vector<double>& grid) {
  const auto cfg = load(c);
  const auto [rep, table] = sweep(cfg, grid.empty() ? cfg.rho_grid : grid);
  if (!cfg.out_dir.empty()) {
    persist_report(rep, cfg.out_dir);
    write_file(std::filesystem::path(cfg.out_dir) / "sweep.csv", sweep_csv(table));
  }
  if (c.format == "json") {
    json j = report_to_json(rep);
    j["sweep"] = {{"established", table.established ? json(*table.established) : json(nullptr)},
                  {"refuted", table.refuted ? json(*table.refuted) : json(nullptr)}};
    std::cout << j.dump(2) << "\n";
  } else if (c.format == "csv") {
    std::cout << sweep_csv(table);
  } else {
    for (const auto& r : table.rows)
      std::printf("%-8s rho=%-10s %-22s %-12s %-26s %s\n", to_string(r.criterion), fmt(r.rho).c_str(),
                  r.eps_policy.c_str(), to_string(r.verdict), to_string(r.implied_bound), to_string(r.status));
    std::printf("established: %s\n", table.established ? fmt(*table.established).c_str() : "none");
    std::printf("refuted: %s\n", table.refuted ? fmt(*table.refuted).c_str() : "none");
  }
  if (rep.any_tension()) {
    std::cerr << "dal: reconciliation reports Tension\n";
    return kTension;
  }
  return kOk;
}

int cmd_report(const std::string& input, const std::string& format, const std::string& table) {
  json j;
  try {
    j = json::parse(read_file(input));
  } catch (const json::parse_error& e) {
    throw IoError(input + ": " + e.what());
  }
  ExperimentReport rep;
  try {
    rep = report_from_json(j);
  } catch (const std::exception& e) {
    throw IoError(input + ": not a report: " + e.what());
  }
  if (format == "csv") {
    if (table == "criteria")
      std::cout << criteria_csv(rep.criteria);
    else if (table == "reconciliation")
      std::cout << reconciliation_csv(rep.reconciliation);
    else if (table == "traces")
      std::cout << traces_csv(rep.trials);
    else if (table == "partial_sums")
      std::cout << partial_sums_csv(rep.criteria);
    else
      std::cout << trials_csv(rep.trials);
  } else if (format == "json") {
    std::cout << dump_report(rep);
  } else {
    print_summary(rep);
  }
  return rep.any_tension() ? kTension : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet series abscissa estimation and criterion checks"};
  app.require_subcommand(1, 1);

  Common common;
  std::size_t trial = 0;
  auto* est = app.add_subcommand("estimate", "estimate abscissas and tail limits for one trial");
  add_common(est, common, true);
  est->add_option("--trial", trial, "trial index");

  CriterionArgs ca;
  auto* crit = app.add_subcommand("criterion", "evaluate one criterion sum from the exact laws");
  add_common(crit, common, true);
  crit->add_option("--criterion", ca.id, "criterion id (thm3i, thm4i, cor1, ...)")->required();
  crit->add_option("--rho", ca.rho, "rho");
  crit->add_option("--eps", ca.eps, "fixed epsilon");
  crit->add_option("--schedule", ca.schedule, "epsilon schedule (thm4i/thm4ii/thm2a)");
  crit->add_option("--delta", ca.delta, "delta schedule (thm1b)");
  crit->add_option("--E", ca.E, "E (thm2b)");
  crit->add_option("--law", ca.law, "auxiliary law as JSON (cor2, cor3)");

  auto* exp = app.add_subcommand("experiment", "run all trials, criteria and reconciliation");
  add_common(exp, common, true);

  std::vector<double> grid;
  auto* sw = app.add_subcommand("sweep", "evaluate criteria across a rho grid");
  add_common(sw, common, true);
  sw->add_option("--rho-grid", grid, "rho values (default: config rho_grid)")->delimiter(',');

  std::string input, rformat = "text", table = "trials";
  auto* rep = app.add_subcommand("report", "re-emit a saved report.json");
  rep->add_option("--input", input, "report.json path")->required();
  rep->add_option("--format", rformat, "output format")->check(CLI::IsMember({"text", "json", "csv"}));
  rep->add_option("--table", table, "CSV table")
      ->check(CLI::IsMember({"trials", "criteria", "reconciliation", "traces", "partial_sums"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*est) return cmd_estimate(common, trial);
    if (*crit) return cmd_criterion(common, ca);
    if (*exp) return cmd_experiment(common);
    if (*sw) return cmd_sweep(common, grid);
    if (*rep) return cmd_report(input, rformat, table);
  } catch (const ConfigError& e) {
    std::cerr << "dal: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "dal: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
