#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dal/experiment.hpp"

namespace dal {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON. Non-finite reals are the strings "inf", "-inf", "nan".

namespace detail {

inline json ext_json(double v) {
  if (std::isfinite(v)) return v;
  return format_ext(v);
}

inline double ext_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    return parse_ext(s);
  }
  throw std::invalid_argument("expected a number or inf/-inf/nan");
}

inline json trace_json(const std::vector<WindowPoint>& t) {
  json a = json::array();
  for (const auto& p : t) a.push_back(json::array({p.start, ext_json(p.extremum)}));
  return a;
}

inline std::vector<WindowPoint> trace_from(const json& j) {
  std::vector<WindowPoint> t;
  for (const auto& p : j) t.push_back({p.at(0).get<std::size_t>(), ext_from(p.at(1))});
  return t;
}

inline json aggregate_json(const Aggregate& a) {
  return {{"count", a.count},
          {"median", ext_json(a.median)},
          {"iqr", ext_json(a.iqr)},
          {"min", ext_json(a.min)},
          {"max", ext_json(a.max)},
          {"fraction_at_sentinel", a.fraction_at_sentinel}};
}

inline Aggregate aggregate_from(const json& j) {
  Aggregate a;
  a.count = j.at("count").get<std::size_t>();
  a.median = ext_from(j.at("median"));
  a.iqr = ext_from(j.at("iqr"));
  a.min = ext_from(j.at("min"));
  a.max = ext_from(j.at("max"));
  a.fraction_at_sentinel = j.at("fraction_at_sentinel").get<double>();
  return a;
}

inline SeriesRule series_rule_from_string(const std::string& s) {
  for (auto r : {SeriesRule::EventuallyZero, SeriesRule::SumCap, SeriesRule::NonVanishing, SeriesRule::GeometricEnvelope,
                 SeriesRule::SlopeConvergent, SeriesRule::SlopeDivergent, SeriesRule::CauchyTail,
                 SeriesRule::NoRuleFired})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown series rule: " + s);
}

}  // namespace detail

inline json trial_to_json(const TrialRecord& t) {
  using detail::ext_json;
  return {{"trial", t.trial},
          {"sigma_abs", ext_json(t.sigma_abs)},
          {"sigma_conv", ext_json(t.sigma_conv)},
          {"alpha0", ext_json(t.alpha0)},
          {"tau", ext_json(t.tau)},
          {"h", ext_json(t.h)},
          {"trend_alpha0", t.trend_alpha0},
          {"monotone", t.monotone},
          {"alpha0_trace", detail::trace_json(t.alpha0_trace)},
          {"tau_trace", detail::trace_json(t.tau_trace)},
          {"h_trace", detail::trace_json(t.h_trace)},
          {"errors", t.errors}};
}

inline TrialRecord trial_from_json(const json& j) {
  using detail::ext_from;
  TrialRecord t;
  t.trial = j.at("trial").get<std::size_t>();
  t.sigma_abs = ext_from(j.at("sigma_abs"));
  t.sigma_conv = ext_from(j.at("sigma_conv"));
  t.alpha0 = ext_from(j.at("alpha0"));
  t.tau = ext_from(j.at("tau"));
  t.h = ext_from(j.at("h"));
  t.trend_alpha0 = j.at("trend_alpha0").get<std::string>();
  t.monotone = j.at("monotone").get<bool>();
  t.alpha0_trace = detail::trace_from(j.at("alpha0_trace"));
  t.tau_trace = detail::trace_from(j.at("tau_trace"));
  t.h_trace = detail::trace_from(j.at("h_trace"));
  t.errors = j.at("errors").get<std::vector<std::string>>();
  return t;
}

inline json criterion_to_json(const CriterionReport& c) {
  using detail::ext_json;
  json ps = json::array();
  for (const auto& [k, s] : c.verdict.partial_sums) ps.push_back(json::array({k, ext_json(s)}));
  json j = {{"criterion", to_string(c.id)},
            {"rho", ext_json(c.rho)},
            {"eps_policy", c.eps_policy},
            {"verdict", to_string(c.verdict.cls)},
            {"rule", to_string(c.verdict.rule)},
            {"tail_slope", ext_json(c.verdict.tail_slope)},
            {"partial_sums", ps},
            {"implied_bound", to_string(c.implied_bound)},
            {"hypotheses_hold", c.hypotheses_hold},
            {"notes", c.notes}};
  if (c.f_plus0) j["f_plus0"] = ext_json(*c.f_plus0);
  if (c.value_sum_route) j["value_sum_route"] = ext_json(*c.value_sum_route);
  if (c.value_quadrature_route) j["value_quadrature_route"] = ext_json(*c.value_quadrature_route);
  return j;
}

inline CriterionReport criterion_from_json(const json& j) {
  using detail::ext_from;
  CriterionReport c;
  c.id = criterion_from_string(j.at("criterion").get<std::string>());
  c.rho = ext_from(j.at("rho"));
  c.eps_policy = j.at("eps_policy").get<std::string>();
  c.verdict.cls = series_class_from_string(j.at("verdict").get<std::string>());
  c.verdict.rule = detail::series_rule_from_string(j.at("rule").get<std::string>());
  c.verdict.tail_slope = ext_from(j.at("tail_slope"));
  for (const auto& p : j.at("partial_sums")) c.verdict.partial_sums.emplace_back(p.at(0).get<std::size_t>(), ext_from(p.at(1)));
  c.implied_bound = implied_bound_from_string(j.at("implied_bound").get<std::string>());
  c.hypotheses_hold = j.at("hypotheses_hold").get<bool>();
  c.notes = j.at("notes").get<std::vector<std::string>>();
  if (j.contains("f_plus0")) c.f_plus0 = ext_from(j.at("f_plus0"));
  if (j.contains("value_sum_route")) c.value_sum_route = ext_from(j.at("value_sum_route"));
  if (j.contains("value_quadrature_route")) c.value_quadrature_route = ext_from(j.at("value_quadrature_route"));
  return c;
}

inline json report_to_json(const ExperimentReport& r) {
  using detail::aggregate_json;
  using detail::ext_json;
  json j;
  j["config"] = r.config;
  j["trials"] = json::array();
  for (const auto& t : r.trials) j["trials"].push_back(trial_to_json(t));
  j["aggregates"] = {{"sigma_abs", aggregate_json(r.agg_sigma_abs)},
                     {"sigma_conv", aggregate_json(r.agg_sigma_conv)},
                     {"alpha0", aggregate_json(r.agg_alpha0)},
                     {"tau", aggregate_json(r.agg_tau)},
                     {"h", aggregate_json(r.agg_h)}};
  j["criteria"] = json::array();
  for (const auto& c : r.criteria) j["criteria"].push_back(criterion_to_json(c));
  j["reconciliation"] = json::array();
  for (const auto& e : r.reconciliation)
    j["reconciliation"].push_back({{"criterion", to_string(e.criterion)},
                                   {"rho", ext_json(e.rho)},
                                   {"eps_policy", e.eps_policy},
                                   {"implied_bound", to_string(e.implied_bound)},
                                   {"status", to_string(e.status)},
                                   {"estimand", "sigma_abs"},
                                   {"satisfied_fraction", e.satisfied_fraction},
                                   {"violated_fraction", e.violated_fraction}});
  j["constancy"] = {{"statistic", "sigma_abs"}, {"iqr", ext_json(r.constancy_spread)}};
  if (r.coef_condition_holds) {
    j["coef_condition"] = {{"holds", *r.coef_condition_holds}};
    if (r.coef_condition_estimate) j["coef_condition"]["estimate"] = ext_json(*r.coef_condition_estimate);
  }
  return j;
}

inline ExperimentReport report_from_json(const json& j) {
  using detail::aggregate_from;
  using detail::ext_from;
  ExperimentReport r;
  r.config = j.at("config");
  for (const auto& t : j.at("trials")) r.trials.push_back(trial_from_json(t));
  const auto& a = j.at("aggregates");
  r.agg_sigma_abs = aggregate_from(a.at("sigma_abs"));
  r.agg_sigma_conv = aggregate_from(a.at("sigma_conv"));
  r.agg_alpha0 = aggregate_from(a.at("alpha0"));
  r.agg_tau = aggregate_from(a.at("tau"));
  r.agg_h = aggregate_from(a.at("h"));
  for (const auto& c : j.at("criteria")) r.criteria.push_back(criterion_from_json(c));
  for (const auto& e : j.at("reconciliation")) {
    ReconciliationEntry x;
    x.criterion = criterion_from_string(e.at("criterion").get<std::string>());
    x.rho = ext_from(e.at("rho"));
    x.eps_policy = e.at("eps_policy").get<std::string>();
    x.implied_bound = implied_bound_from_string(e.at("implied_bound").get<std::string>());
    x.status = reconciliation_from_string(e.at("status").get<std::string>());
    x.satisfied_fraction = e.at("satisfied_fraction").get<double>();
    x.violated_fraction = e.at("violated_fraction").get<double>();
    r.reconciliation.push_back(std::move(x));
  }
  r.constancy_spread = ext_from(j.at("constancy").at("iqr"));
  if (j.contains("coef_condition")) {
    r.coef_condition_holds = j.at("coef_condition").at("holds").get<bool>();
    if (j.at("coef_condition").contains("estimate")) r.coef_condition_estimate = ext_from(j.at("coef_condition").at("estimate"));
  }
  return r;
}

inline std::string dump_report(const ExperimentReport& r) { return report_to_json(r).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kTrialsHeader = "trial,sigma_abs,sigma_conv,alpha0,tau,h,trend_alpha0,errors";
inline constexpr const char* kCriteriaHeader = "criterion,rho,eps_policy,verdict,implied_bound,partial_sum_at_K";

namespace detail {

// errors are joined with '|'; separators inside a message are blanked
inline std::string csv_field(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '|' || ch == '"') ch = ' ';
  return s;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline std::string trials_csv(const std::vector<TrialRecord>& trials) {
  std::ostringstream o;
  o << kTrialsHeader << "\n";
  for (const auto& t : trials) {
    std::string errs;
    for (std::size_t i = 0; i < t.errors.size(); ++i) errs += (i ? "|" : "") + detail::csv_field(t.errors[i]);
    o << t.trial << ',' << format_ext(t.sigma_abs) << ',' << format_ext(t.sigma_conv) << ',' << format_ext(t.alpha0)
      << ',' << format_ext(t.tau) << ',' << format_ext(t.h) << ',' << t.trend_alpha0 << ',' << errs << "\n";
  }
  return o.str();
}

inline double parse_csv_real(const std::string& s) { return s == "nan" ? std::nan("") : parse_ext(s); }

/// Inverse of trials_csv for the columns it carries (traces are JSON-only).
inline std::vector<TrialRecord> parse_trials_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTrialsHeader) throw IoError("trials.csv: bad header");
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 8) throw IoError("trials.csv: expected 8 fields in '" + line + "'");
    TrialRecord t;
    try {
      t.trial = std::stoull(f[0]);
      t.sigma_abs = parse_csv_real(f[1]);
      t.sigma_conv = parse_csv_real(f[2]);
      t.alpha0 = parse_csv_real(f[3]);
      t.tau = parse_csv_real(f[4]);
      t.h = parse_csv_real(f[5]);
    } catch (const std::exception& e) {
      throw IoError(std::string("trials.csv: ") + e.what());
    }
    t.trend_alpha0 = f[6];
    if (!f[7].empty()) t.errors = detail::split(f[7], '|');
    out.push_back(std::move(t));
  }
  return out;
}

inline std::string criteria_csv(const std::vector<CriterionReport>& reports) {
  std::ostringstream o;
  o << kCriteriaHeader << "\n";
  for (const auto& c : reports)
    o << to_string(c.id) << ',' << format_ext(c.rho) << ',' << detail::csv_field(c.eps_policy) << ','
      << to_string(c.verdict.cls) << ',' << to_string(c.implied_bound) << ',' << format_ext(c.partial_sum_at_K())
      << "\n";
  return o.str();
}

struct CriteriaCsvRow {
  CriterionId criterion;
  double rho;
  std::string eps_policy;
  SeriesClass verdict;
  ImpliedBound implied_bound;
  double partial_sum_at_K;
};

inline std::vector<CriteriaCsvRow> parse_criteria_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCriteriaHeader) throw IoError("criteria.csv: bad header");
  std::vector<CriteriaCsvRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 6) throw IoError("criteria.csv: expected 6 fields in '" + line + "'");
    try {
      out.push_back({criterion_from_string(f[0]), parse_csv_real(f[1]), f[2], series_class_from_string(f[3]),
                     implied_bound_from_string(f[4]), parse_csv_real(f[5])});
    } catch (const std::exception& e) {
      throw IoError(std::string("criteria.csv: ") + e.what());
    }
  }
  return out;
}

/// Plot data: window traces per trial.
inline std::string traces_csv(const std::vector<TrialRecord>& trials) {
  std::ostringstream o;
  o << "trial,statistic,window_start,extremum\n";
  for (const auto& t : trials) {
    auto emit = [&](const char* name, const std::vector<WindowPoint>& tr) {
      for (const auto& p : tr) o << t.trial << ',' << name << ',' << p.start << ',' << format_ext(p.extremum) << "\n";
    };
    emit("alpha0", t.alpha0_trace);
    emit("tau", t.tau_trace);
    emit("h", t.h_trace);
  }
  return o.str();
}

/// Plot data: checkpointed partial sums per criterion report.
inline std::string partial_sums_csv(const std::vector<CriterionReport>& reports) {
  std::ostringstream o;
  o << "criterion,rho,eps_policy,k,partial_sum\n";
  for (const auto& c : reports)
    for (const auto& [k, s] : c.verdict.partial_sums)
      o << to_string(c.id) << ',' << format_ext(c.rho) << ',' << detail::csv_field(c.eps_policy) << ',' << k << ','
        << format_ext(s) << "\n";
  return o.str();
}

inline std::string reconciliation_csv(const std::vector<ReconciliationEntry>& rec) {
  std::ostringstream o;
  o << "criterion,rho,eps_policy,implied_bound,status,satisfied_fraction,violated_fraction\n";
  for (const auto& e : rec)
    o << to_string(e.criterion) << ',' << format_ext(e.rho) << ',' << detail::csv_field(e.eps_policy) << ','
      << to_string(e.implied_bound) << ',' << to_string(e.status) << ',' << format_ext(e.satisfied_fraction) << ','
      << format_ext(e.violated_fraction) << "\n";
  return o.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  f << content;
  if (!f) throw IoError("write failed: " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

/// report.json, trials.csv, criteria.csv plus plot CSVs under `dir`.
inline void persist_report(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "report.json", dump_report(r));
  write_file(dir / "trials.csv", trials_csv(r.trials));
  write_file(dir / "criteria.csv", criteria_csv(r.criteria));
  write_file(dir / "reconciliation.csv", reconciliation_csv(r.reconciliation));
  write_file(dir / "traces.csv", traces_csv(r.trials));
  write_file(dir / "partial_sums.csv", partial_sums_csv(r.criteria));
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw ConfigError("config not found: " + p.string());
  std::string text;
  try {
    text = read_file(p);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace dal
