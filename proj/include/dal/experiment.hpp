#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dal/bc_criteria.hpp"
#include "dal/cdf_model.hpp"
#include "dal/ext_real.hpp"
#include "dal/laws.hpp"
#include "dal/series_engine.hpp"
#include "dal/tail_limits.hpp"

namespace dal {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Law <-> JSON

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown field '" + it.key() + "'");
  }
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline double need_num(const json& j, const char* key, const std::string& where) {
  const auto& v = need(j, key, where);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::string need_str(const json& j, const char* key, const std::string& where) {
  const auto& v = need(j, key, where);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline bool is_nonneg_int(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline SequenceRule parse_rule(const std::string& text, const std::string& where) {
  try {
    return SequenceRule::parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

template <class F>
auto wrap_law_error(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace detail

inline CdfModel cdf_from_json(const json& j, const std::string& where = "law") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::string fam = need_str(j, "family", where);
  return wrap_law_error(where, [&]() -> CdfModel {
    if (fam == "exponential") {
      check_keys(j, {"family", "rate"}, where);
      return CdfModel::exponential(need_num(j, "rate", where));
    }
    if (fam == "uniform") {
      check_keys(j, {"family", "a", "b"}, where);
      return CdfModel::uniform(need_num(j, "a", where), need_num(j, "b", where));
    }
    if (fam == "pareto") {
      check_keys(j, {"family", "scale", "shape"}, where);
      return CdfModel::pareto(need_num(j, "scale", where), need_num(j, "shape", where));
    }
    if (fam == "lognormal") {
      check_keys(j, {"family", "mu", "sigma"}, where);
      return CdfModel::lognormal(need_num(j, "mu", where), need_num(j, "sigma", where));
    }
    if (fam == "degenerate") {
      check_keys(j, {"family", "point"}, where);
      return CdfModel::degenerate(need_num(j, "point", where));
    }
    if (fam == "scaled") {
      check_keys(j, {"family", "base", "factor"}, where);
      return CdfModel::scaled(cdf_from_json(need(j, "base", where), where + ".base"), need_num(j, "factor", where));
    }
    if (fam == "shifted") {
      check_keys(j, {"family", "base", "offset"}, where);
      return CdfModel::shifted(cdf_from_json(need(j, "base", where), where + ".base"), need_num(j, "offset", where));
    }
    throw ConfigError(where + ": unknown family '" + fam + "'");
  });
}

inline Dependence dependence_from_json(const json& j, const std::string& where) {
  if (!j.contains("dependence")) return Dependence::MutuallyIndependent;
  const std::string d = detail::need_str(j, "dependence", where);
  if (d == "mutually_independent") return Dependence::MutuallyIndependent;
  if (d == "pairwise") return Dependence::PairwiseConstruction;
  throw ConfigError(where + ".dependence: expected 'mutually_independent' or 'pairwise'");
}

inline ExponentLaw exponent_from_json(const json& j, const std::string& where = "exponent") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::string rule = need_str(j, "rule", where);
  return wrap_law_error(where, [&]() -> ExponentLaw {
    if (rule == "constant") {
      check_keys(j, {"rule", "base", "dependence"}, where);
      return ExponentLaw::constant(cdf_from_json(need(j, "base", where), where + ".base"),
                                   dependence_from_json(j, where));
    }
    if (rule == "deterministic") {
      check_keys(j, {"rule", "sequence"}, where);
      return ExponentLaw::deterministic(parse_rule(need_str(j, "sequence", where), where + ".sequence"));
    }
    if (rule == "scaled_iid") {
      check_keys(j, {"rule", "scale", "base", "dependence"}, where);
      return ExponentLaw::scaled_iid(parse_rule(need_str(j, "scale", where), where + ".scale"),
                                     cdf_from_json(need(j, "base", where), where + ".base"),
                                     dependence_from_json(j, where));
    }
    throw ConfigError(where + ": unknown rule '" + rule + "'");
  });
}

inline CoefficientLaw coefficient_from_json(const json& j, const std::string& where = "coefficient") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::string mode = need_str(j, "mode", where);
  return wrap_law_error(where, [&]() -> CoefficientLaw {
    if (mode == "deterministic") {
      check_keys(j, {"mode", "neg_log"}, where);
      return CoefficientLaw::deterministic(parse_rule(need_str(j, "neg_log", where), where + ".neg_log"));
    }
    if (mode == "random_modulus") {
      check_keys(j, {"mode", "law", "scale_neg_log"}, where);
      std::optional<SequenceRule> scale;
      if (j.contains("scale_neg_log")) scale = parse_rule(need_str(j, "scale_neg_log", where), where + ".scale_neg_log");
      return CoefficientLaw::random_modulus(cdf_from_json(need(j, "law", where), where + ".law"), scale);
    }
    throw ConfigError(where + ": unknown mode '" + mode + "'");
  });
}

// ---------------------------------------------------------------------------
// Config

struct CriterionSpec {
  CriterionId id = CriterionId::Thm3i;
  std::optional<double> rho;
  std::optional<double> eps;
  std::optional<std::string> eps_policy;  // "half" or "grid"
  std::optional<std::string> schedule;    // thm4i/thm4ii/thm2a
  std::optional<std::string> delta;       // thm1b
  std::optional<double> E;                // thm2b
  std::optional<json> law;                // cor2 dominating law, cor3 F_b
};

struct ReconcileThresholds {
  double consistent = 0.95;
  double tension = 0.5;
};

struct ExperimentConfig {
  std::string name;
  json exponent_json;
  json coefficient_json;
  std::size_t K = 0;
  std::size_t trials = 0;
  std::uint64_t master_seed = 0;
  BisectionOptions bisection;
  std::vector<std::size_t> windows;  // empty: default schedule
  std::vector<double> rho_grid;
  std::string eps_policy = "half";
  std::vector<CriterionSpec> criteria;
  ReconcileThresholds reconcile;
  std::string out_dir;

  ExponentLaw exponent() const { return exponent_from_json(exponent_json); }
  CoefficientLaw coefficient() const { return coefficient_from_json(coefficient_json); }
};

inline InconclusivePolicy policy_from_string(const std::string& s) {
  for (auto p : {InconclusivePolicy::ConservativeDown, InconclusivePolicy::ConservativeUp, InconclusivePolicy::Midpoint})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown inconclusive policy '" + s + "'");
}

inline void validate(const ExperimentConfig& c) {
  if (c.K < 16) throw ConfigError("K must be >= 16");
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  for (std::size_t i = 1; i < c.rho_grid.size(); ++i)
    if (!(c.rho_grid[i] > c.rho_grid[i - 1])) throw ConfigError("rho_grid must be strictly increasing");
  for (double r : c.rho_grid)
    if (!std::isfinite(r)) throw ConfigError("rho_grid entries must be finite");
  if (!(c.bisection.tol > 0.0)) throw ConfigError("bisection.tol must be > 0");
  if (!(c.bisection.x_lo < c.bisection.x_hi)) throw ConfigError("bisection range must satisfy x_lo < x_hi");
  if (c.eps_policy != "half" && c.eps_policy != "grid") throw ConfigError("eps_policy must be 'half' or 'grid'");
  if (!(c.reconcile.consistent > 0.0 && c.reconcile.consistent <= 1.0 && c.reconcile.tension > 0.0 &&
        c.reconcile.tension <= 1.0))
    throw ConfigError("reconcile fractions must lie in (0, 1]");
  for (const auto& s : c.criteria) {
    if (s.eps_policy && *s.eps_policy != "half" && *s.eps_policy != "grid")
      throw ConfigError("criterion eps_policy must be 'half' or 'grid'");
    if (s.schedule) detail::parse_rule(*s.schedule, "criterion schedule");
    if (s.delta) detail::parse_rule(*s.delta, "criterion delta");
    if (s.law) cdf_from_json(*s.law, std::string("criterion ") + to_string(s.id) + ".law");
    if ((s.id == CriterionId::Cor2 || s.id == CriterionId::Cor3) && !s.law)
      throw ConfigError(std::string(to_string(s.id)) + ": needs an auxiliary 'law'");
    if (s.id == CriterionId::Thm1b && !s.delta) throw ConfigError("thm1b: needs a 'delta' schedule");
    if (s.id == CriterionId::Thm2b && !s.E) throw ConfigError("thm2b: needs 'E'");
  }
  // constructing the laws validates them
  c.exponent();
  c.coefficient();
}

inline ExperimentConfig config_from_json(const json& j) {
  using namespace detail;
  const std::string w = "config";
  check_keys(j,
             {"name", "exponent", "coefficient", "K", "trials", "master_seed", "bisection", "windows", "rho_grid",
              "eps_policy", "criteria", "reconcile", "outputs"},
             w);
  ExperimentConfig c;
  try {
    if (j.contains("name")) c.name = need_str(j, "name", w);
    c.exponent_json = need(j, "exponent", w);
    c.coefficient_json = need(j, "coefficient", w);
    const auto& K = need(j, "K", w);
    if (!is_nonneg_int(K)) throw ConfigError("K must be a positive integer");
    c.K = K.get<std::size_t>();
    const auto& N = need(j, "trials", w);
    if (!is_nonneg_int(N)) throw ConfigError("trials must be a positive integer");
    c.trials = N.get<std::size_t>();
    if (j.contains("master_seed")) {
      if (!is_nonneg_int(j.at("master_seed"))) throw ConfigError("master_seed must be a nonnegative integer");
      c.master_seed = j.at("master_seed").get<std::uint64_t>();
    }
    if (j.contains("bisection")) {
      const auto& b = j.at("bisection");
      check_keys(b, {"x_lo", "x_hi", "tol", "max_iter", "policy"}, "bisection");
      if (b.contains("x_lo")) c.bisection.x_lo = need_num(b, "x_lo", "bisection");
      if (b.contains("x_hi")) c.bisection.x_hi = need_num(b, "x_hi", "bisection");
      if (b.contains("tol")) c.bisection.tol = need_num(b, "tol", "bisection");
      if (b.contains("max_iter")) c.bisection.max_iter = b.at("max_iter").get<int>();
      if (b.contains("policy")) c.bisection.policy = policy_from_string(need_str(b, "policy", "bisection"));
    }
    if (j.contains("windows")) c.windows = j.at("windows").get<std::vector<std::size_t>>();
    if (j.contains("rho_grid")) c.rho_grid = j.at("rho_grid").get<std::vector<double>>();
    if (j.contains("eps_policy")) c.eps_policy = need_str(j, "eps_policy", w);
    if (j.contains("criteria")) {
      const auto& arr = j.at("criteria");
      if (!arr.is_array()) throw ConfigError("criteria must be an array");
      for (const auto& e : arr) {
        const std::string cw = "criteria[]";
        check_keys(e, {"id", "rho", "eps", "eps_policy", "schedule", "delta", "E", "law"}, cw);
        CriterionSpec s;
        try {
          s.id = criterion_from_string(need_str(e, "id", cw));
        } catch (const std::invalid_argument& ex) {
          throw ConfigError(ex.what());
        }
        if (e.contains("rho")) s.rho = need_num(e, "rho", cw);
        if (e.contains("eps")) s.eps = need_num(e, "eps", cw);
        if (e.contains("eps_policy")) s.eps_policy = need_str(e, "eps_policy", cw);
        if (e.contains("schedule")) s.schedule = need_str(e, "schedule", cw);
        if (e.contains("delta")) s.delta = need_str(e, "delta", cw);
        if (e.contains("E")) s.E = need_num(e, "E", cw);
        if (e.contains("law")) s.law = e.at("law");
        c.criteria.push_back(std::move(s));
      }
    }
    if (j.contains("reconcile")) {
      const auto& r = j.at("reconcile");
      check_keys(r, {"consistent", "tension"}, "reconcile");
      if (r.contains("consistent")) c.reconcile.consistent = need_num(r, "consistent", "reconcile");
      if (r.contains("tension")) c.reconcile.tension = need_num(r, "tension", "reconcile");
    }
    if (j.contains("outputs")) {
      const auto& o = j.at("outputs");
      check_keys(o, {"dir"}, "outputs");
      if (o.contains("dir")) c.out_dir = need_str(o, "dir", "outputs");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

inline json criterion_spec_to_json(const CriterionSpec& s) {
  json e;
  e["id"] = to_string(s.id);
  if (s.rho) e["rho"] = *s.rho;
  if (s.eps) e["eps"] = *s.eps;
  if (s.eps_policy) e["eps_policy"] = *s.eps_policy;
  if (s.schedule) e["schedule"] = *s.schedule;
  if (s.delta) e["delta"] = *s.delta;
  if (s.E) e["E"] = *s.E;
  if (s.law) e["law"] = *s.law;
  return e;
}

/// Full config with defaults filled in; config_from_json inverts it.
inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["exponent"] = c.exponent_json;
  j["coefficient"] = c.coefficient_json;
  j["K"] = c.K;
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["bisection"] = {{"x_lo", c.bisection.x_lo},
                    {"x_hi", c.bisection.x_hi},
                    {"tol", c.bisection.tol},
                    {"max_iter", c.bisection.max_iter},
                    {"policy", to_string(c.bisection.policy)}};
  j["windows"] = c.windows;
  j["rho_grid"] = c.rho_grid;
  j["eps_policy"] = c.eps_policy;
  j["criteria"] = json::array();
  for (const auto& s : c.criteria) j["criteria"].push_back(criterion_spec_to_json(s));
  j["reconcile"] = {{"consistent", c.reconcile.consistent}, {"tension", c.reconcile.tension}};
  j["outputs"] = {{"dir", c.out_dir}};
  return j;
}

// ---------------------------------------------------------------------------
// Trials

struct TrialRecord {
  std::size_t trial = 0;
  ExtReal sigma_abs = std::nan("");
  ExtReal sigma_conv = std::nan("");
  ExtReal alpha0 = std::nan("");
  ExtReal tau = std::nan("");
  ExtReal h = std::nan("");
  std::string trend_alpha0 = "none";
  bool monotone = false;
  std::vector<WindowPoint> alpha0_trace, tau_trace, h_trace;
  std::vector<std::string> errors;
};

/// Pure function of (config, trial_index).
inline TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial_index) {
  const auto exp_law = cfg.exponent();
  const auto coeff = cfg.coefficient();
  TrialRecord r;
  r.trial = trial_index;
  const auto draw = sample_trial(exp_law, coeff, cfg.master_seed, trial_index, cfg.K);
  r.monotone = cor4_monotone_check(draw);
  std::vector<double> mu;
  try {
    mu = neg_log_coefficients(coeff, draw);
  } catch (const std::exception& e) {
    r.errors.push_back(std::string("coefficients: ") + e.what());
    return r;
  }
  auto guard = [&](const char* what, auto&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      r.errors.push_back(std::string(what) + ": " + e.what());
    }
  };
  guard("alpha0", [&] {
    const auto e = alpha0(mu, draw.lambdas, cfg.windows);
    r.alpha0 = e.value;
    r.trend_alpha0 = to_string(e.trend);
    r.alpha0_trace = e.window_trace;
  });
  guard("tau", [&] {
    const auto e = tau(draw.lambdas, cfg.windows);
    r.tau = e.value;
    r.tau_trace = e.window_trace;
  });
  guard("h", [&] {
    const auto e = h_coeff(mu, cfg.windows);
    r.h = e.value;
    r.h_trace = e.window_trace;
  });
  guard("sigma_abs", [&] {
    r.sigma_abs = sigma_abs(mu, draw.lambdas, cfg.bisection).value;
    // coefficients carry no sign information in either mode, so the
    // signed and absolute series coincide
    r.sigma_conv = r.sigma_abs;
  });
  return r;
}

/// Worker count: DAL_THREADS if set and positive, else machine parallelism.
inline unsigned default_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DAL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    } catch (const std::exception&) {
    }
  }
  return n;
}

/// Runs the given trial indices; the result is sorted by trial index.
inline std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, std::vector<std::size_t> indices,
                                           unsigned threads = 0) {
  if (threads == 0) threads = default_threads();
  std::sort(indices.begin(), indices.end());
  std::vector<TrialRecord> out(indices.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < indices.size();) {
      if (failed) return;
      try {
        out[i] = run_trial(cfg, indices[i]);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(indices.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// Aggregates and reconciliation

struct Aggregate {
  std::size_t count = 0;  // non-NaN estimates
  ExtReal median = std::nan("");
  ExtReal iqr = std::nan("");
  ExtReal min = std::nan("");
  ExtReal max = std::nan("");
  double fraction_at_sentinel = 0.0;
};

namespace detail {

// linear interpolation between order statistics; inf - inf is reported as NaN
inline double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || v[lo] == v[hi]) return v[lo];
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace detail

inline Aggregate aggregate(std::vector<double> values, std::size_t total) {
  Aggregate a;
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
  a.count = values.size();
  if (values.empty()) return a;
  std::sort(values.begin(), values.end());
  a.median = detail::quantile_sorted(values, 0.5);
  const double q1 = detail::quantile_sorted(values, 0.25), q3 = detail::quantile_sorted(values, 0.75);
  a.iqr = (q1 == q3) ? 0.0 : q3 - q1;
  a.min = values.front();
  a.max = values.back();
  const auto s = std::count_if(values.begin(), values.end(), [](double v) { return is_sentinel(v); });
  a.fraction_at_sentinel = static_cast<double>(s) / static_cast<double>(total);
  return a;
}

enum class Reconciliation { Consistent, Tension, Inconclusive };

inline const char* to_string(Reconciliation r) {
  switch (r) {
    case Reconciliation::Consistent: return "Consistent";
    case Reconciliation::Tension: return "Tension";
    case Reconciliation::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline Reconciliation reconciliation_from_string(const std::string& s) {
  for (auto r : {Reconciliation::Consistent, Reconciliation::Tension, Reconciliation::Inconclusive})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown reconciliation: " + s);
}

struct ReconciliationEntry {
  CriterionId criterion = CriterionId::Thm3i;
  double rho = 0.0;
  std::string eps_policy;
  ImpliedBound implied_bound = ImpliedBound::NotApplicable;
  Reconciliation status = Reconciliation::Inconclusive;
  double satisfied_fraction = 0.0;
  double violated_fraction = 0.0;
};

/// Does one estimate satisfy the bound? nullopt when the bound says nothing
/// checkable or the estimate is missing. Sentinels use extended-real order.
inline std::optional<bool> bound_satisfied(CriterionId id, ImpliedBound b, double rho, double estimate, double slack) {
  if (std::isnan(estimate)) return std::nullopt;
  switch (b) {
    case ImpliedBound::SigmaGeRho: return estimate >= rho - slack;
    case ImpliedBound::SigmaLeRho: return estimate <= rho + slack;
    case ImpliedBound::SigmaEqRho: return !is_sentinel(estimate) && std::abs(estimate - rho) <= slack;
    case ImpliedBound::NecessaryFails:
      // Thm 2b refutes sigma = -inf; the others refute sigma >= rho
      if (id == CriterionId::Thm2b) return estimate != kNegInf;
      return estimate < rho + slack;
    case ImpliedBound::NecessaryHolds:
    case ImpliedBound::NotApplicable: return std::nullopt;
  }
  return std::nullopt;
}

inline ReconciliationEntry reconcile(const CriterionReport& rep, const std::vector<TrialRecord>& trials, double tol,
                                     const ReconcileThresholds& th = {}) {
  ReconciliationEntry e;
  e.criterion = rep.id;
  e.rho = rep.rho;
  e.eps_policy = rep.eps_policy;
  e.implied_bound = rep.implied_bound;
  if (trials.empty()) return e;
  std::size_t sat = 0, vio = 0;
  bool checkable = false;
  for (const auto& t : trials) {
    const auto ok = bound_satisfied(rep.id, rep.implied_bound, rep.rho, t.sigma_abs, 3.0 * tol);
    if (!ok) continue;
    checkable = true;
    (*ok ? sat : vio)++;
  }
  const double n = static_cast<double>(trials.size());
  e.satisfied_fraction = static_cast<double>(sat) / n;
  e.violated_fraction = static_cast<double>(vio) / n;
  if (!checkable) e.status = Reconciliation::Inconclusive;
  else if (e.satisfied_fraction >= th.consistent) e.status = Reconciliation::Consistent;
  else if (e.violated_fraction >= th.tension) e.status = Reconciliation::Tension;
  else e.status = Reconciliation::Inconclusive;
  return e;
}

// ---------------------------------------------------------------------------
// Criterion evaluation at law level

namespace detail {

inline std::vector<double> rhos_for(const ExperimentConfig& cfg, const CriterionSpec& s) {
  if (s.rho) return {*s.rho};
  return cfg.rho_grid;
}

inline bool rho_in_domain(CriterionId id, double rho) {
  switch (id) {
    case CriterionId::Thm3i:
    case CriterionId::Thm4i:
    case CriterionId::Cor3: return rho > 0.0;
    case CriterionId::Thm3ii:
    case CriterionId::Thm4ii: return rho <= 0.0;
    case CriterionId::Remark3: return rho >= 0.0;
    default: return std::isfinite(rho);
  }
}

}  // namespace detail

/// Reports for one criterion entry. rho-free criteria (Cor1, Cor2, Cor4,
/// Thm1b, Thm2b) give one report; the rest one per rho in range. Grid rho
/// values outside a criterion's domain are skipped; an explicit rho outside
/// it is a config error.
inline std::vector<CriterionReport> evaluate_criterion(const ExperimentConfig& cfg, const CriterionSpec& s,
                                                       bool all_trials_monotone) {
  const auto exp_law = cfg.exponent();
  const auto coeff = cfg.coefficient();
  const std::size_t K = cfg.K;
  const auto& pol = cfg.bisection.series;
  const std::string eps_policy = s.eps_policy.value_or(cfg.eps_policy);
  std::vector<CriterionReport> out;
  auto need_det = [&] {
    if (!coeff.is_deterministic())
      throw ConfigError(std::string(to_string(s.id)) + ": needs deterministic coefficients");
  };
  auto need_rand = [&] {
    if (coeff.is_deterministic())
      throw ConfigError(std::string(to_string(s.id)) + ": needs random-modulus coefficients");
    if (!exp_law.is_deterministic())
      throw ConfigError(std::string(to_string(s.id)) + ": needs deterministic exponents");
  };
  switch (s.id) {
    case CriterionId::Cor1: need_det(); return {cor1_check(exp_law, coeff, K, {}, pol)};
    case CriterionId::Cor2:
      need_det();
      return {cor2_check(exp_law, coeff, cdf_from_json(*s.law), K, {}, pol)};
    case CriterionId::Cor4: need_det(); return {cor4_check(exp_law, coeff, all_trials_monotone, K, pol)};
    case CriterionId::Thm1b:
      need_rand();
      return {thm1b_sum(coeff, exp_law, SequenceRule::parse(*s.delta), K, pol)};
    case CriterionId::Thm2b: need_rand(); return {thm2b_sum(coeff, exp_law, *s.E, K, pol)};
    default: break;
  }
  for (double rho : detail::rhos_for(cfg, s)) {
    if (!detail::rho_in_domain(s.id, rho)) {
      if (s.rho) throw ConfigError(std::string(to_string(s.id)) + ": rho=" + format_ext(rho) + " outside its domain");
      continue;
    }
    switch (s.id) {
      case CriterionId::Thm3i: {
        need_det();
        if (s.eps) {
          if (!(*s.eps > 0.0 && *s.eps < rho)) throw ConfigError("thm3i: eps must lie in (0, rho)");
          out.push_back(thm3_upper_sum(exp_law, coeff, rho, *s.eps, K, pol));
        } else if (eps_policy == "grid") {
          out.push_back(thm3_upper_any_eps(exp_law, coeff, rho, halving_eps_grid(rho), K, pol));
        } else {
          out.push_back(thm3_upper_sum(exp_law, coeff, rho, rho / 2.0, K, pol));
        }
        break;
      }
      case CriterionId::Thm3ii: {
        need_det();
        const double base = rho < 0.0 ? -rho : 1.0;
        if (s.eps) {
          if (!(*s.eps > 0.0)) throw ConfigError("thm3ii: eps must be > 0");
          out.push_back(thm3_lower_sum(exp_law, coeff, rho, *s.eps, K, pol));
        } else if (eps_policy == "grid") {
          CriterionReport last;
          bool done = false;
          for (double e : halving_eps_grid(base)) {
            last = thm3_lower_sum(exp_law, coeff, rho, e, K, pol);
            if (last.verdict.cls == SeriesClass::Divergent) {
              done = true;
              break;
            }
          }
          if (!done) last.eps_policy = "eps-grid(10)";
          out.push_back(last);
        } else {
          out.push_back(thm3_lower_sum(exp_law, coeff, rho, base / 2.0, K, pol));
        }
        break;
      }
      case CriterionId::Thm4i:
      case CriterionId::Thm4ii: {
        need_det();
        const auto sched = s.schedule ? SequenceRule::parse(*s.schedule) : default_eps_schedule();
        try {
          out.push_back(thm4_sum(exp_law, coeff, rho, sched, K, s.id == CriterionId::Thm4i ? Side::Upper : Side::Lower,
                                 pol));
        } catch (const std::domain_error& e) {
          throw ConfigError(e.what());
        }
        break;
      }
      case CriterionId::Remark3: need_det(); out.push_back(remark3_sum(exp_law, coeff, rho, K, {}, pol)); break;
      case CriterionId::Cor3: {
        need_det();
        auto r = cor3_integral(cdf_from_json(*s.law), coeff, rho, K, pol);
        out.push_back(std::move(r.report));
        break;
      }
      case CriterionId::Thm1a: {
        need_rand();
        const double base = std::exp(-rho);
        if (s.eps) {
          if (!(*s.eps > 0.0)) throw ConfigError("thm1a: eps must be > 0");
          out.push_back(thm1a_sum(coeff, exp_law, rho, *s.eps, K, pol));
        } else if (eps_policy == "grid") {
          CriterionReport last;
          for (double e : halving_eps_grid(base)) {
            last = thm1a_sum(coeff, exp_law, rho, e, K, pol);
            if (last.verdict.cls == SeriesClass::Divergent) break;
          }
          out.push_back(last);
        } else {
          out.push_back(thm1a_sum(coeff, exp_law, rho, base / 2.0, K, pol));
        }
        break;
      }
      case CriterionId::Thm2a: {
        need_rand();
        const auto sched = s.schedule ? SequenceRule::parse(*s.schedule) : default_eps_schedule();
        try {
          out.push_back(thm2a_sum(coeff, exp_law, rho, sched, K, pol));
        } catch (const std::domain_error& e) {
          throw ConfigError(e.what());
        }
        break;
      }
      default: break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct ExperimentReport {
  json config;
  std::vector<TrialRecord> trials;
  Aggregate agg_sigma_abs, agg_sigma_conv, agg_alpha0, agg_tau, agg_h;
  std::vector<CriterionReport> criteria;
  std::vector<ReconciliationEntry> reconciliation;
  ExtReal constancy_spread = std::nan("");  // IQR of sigma_abs
  std::optional<bool> coef_condition_holds;  // deterministic coefficients only
  std::optional<double> coef_condition_estimate;

  bool any_tension() const {
    return std::any_of(reconciliation.begin(), reconciliation.end(),
                       [](const ReconciliationEntry& e) { return e.status == Reconciliation::Tension; });
  }
};

/// Order-independent: trials are re-sorted by index before aggregation.
inline ExperimentReport build_report(const ExperimentConfig& cfg, std::vector<TrialRecord> trials) {
  std::sort(trials.begin(), trials.end(), [](const TrialRecord& a, const TrialRecord& b) { return a.trial < b.trial; });
  ExperimentReport rep;
  rep.config = config_to_json(cfg);
  const std::size_t n = trials.size();
  auto column = [&](auto member) {
    std::vector<double> v;
    for (const auto& t : trials) v.push_back(t.*member);
    return aggregate(v, n);
  };
  rep.agg_sigma_abs = column(&TrialRecord::sigma_abs);
  rep.agg_sigma_conv = column(&TrialRecord::sigma_conv);
  rep.agg_alpha0 = column(&TrialRecord::alpha0);
  rep.agg_tau = column(&TrialRecord::tau);
  rep.agg_h = column(&TrialRecord::h);
  rep.constancy_spread = rep.agg_sigma_abs.iqr;

  const auto coeff = cfg.coefficient();
  if (coeff.is_deterministic()) {
    try {
      const auto cc = coef_condition(coeff, cfg.K);
      rep.coef_condition_holds = cc.holds;
      rep.coef_condition_estimate = cc.estimate.value;
    } catch (const std::exception&) {
      rep.coef_condition_holds = false;
    }
  }

  const bool monotone = !trials.empty() && std::all_of(trials.begin(), trials.end(), [](const TrialRecord& t) {
    return t.monotone;
  });
  for (const auto& s : cfg.criteria)
    for (auto& r : evaluate_criterion(cfg, s, monotone)) {
      rep.reconciliation.push_back(reconcile(r, trials, cfg.bisection.tol, cfg.reconcile));
      rep.criteria.push_back(std::move(r));
    }
  rep.trials = std::move(trials);
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
  std::vector<std::size_t> idx(cfg.trials);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return build_report(cfg, run_trials(cfg, idx, threads));
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  CriterionId criterion = CriterionId::Thm3i;
  double rho = 0.0;
  std::string eps_policy;
  SeriesClass verdict = SeriesClass::Inconclusive;
  ImpliedBound implied_bound = ImpliedBound::NotApplicable;
  Reconciliation status = Reconciliation::Inconclusive;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::optional<double> established;  // largest rho with sigma >= rho (or = rho) implied
  std::optional<double> refuted;      // smallest rho where a necessary condition for sigma >= rho fails
};

inline SweepTable sweep_from_report(const ExperimentReport& rep) {
  SweepTable t;
  for (std::size_t i = 0; i < rep.criteria.size(); ++i) {
    const auto& c = rep.criteria[i];
    t.rows.push_back({c.id, c.rho, c.eps_policy, c.verdict.cls, c.implied_bound, rep.reconciliation[i].status});
    if (c.implied_bound == ImpliedBound::SigmaGeRho || c.implied_bound == ImpliedBound::SigmaEqRho)
      if (!t.established || c.rho > *t.established) t.established = c.rho;
    if (c.implied_bound == ImpliedBound::NecessaryFails && c.id != CriterionId::Thm2b)
      if (!t.refuted || c.rho < *t.refuted) t.refuted = c.rho;
  }
  return t;
}

/// Evaluates every configured criterion across `rho_grid` (explicit rho
/// values in the criteria are dropped, as are fixed eps values, which
/// would not fit every rho) and reconciles against the trials.
inline std::pair<ExperimentReport, SweepTable> sweep(ExperimentConfig cfg, const std::vector<double>& rho_grid,
                                                     unsigned threads = 0) {
  cfg.rho_grid = rho_grid;
  for (auto& s : cfg.criteria) {
    s.rho.reset();
    s.eps.reset();
  }
  validate(cfg);
  auto rep = run_experiment(cfg, threads);
  auto table = sweep_from_report(rep);
  return {std::move(rep), std::move(table)};
}

}  // namespace dal
