#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dal/cdf_model.hpp"
#include "dal/ext_real.hpp"
#include "dal/laws.hpp"
#include "dal/series_engine.hpp"
#include "dal/tail_limits.hpp"

namespace dal {

enum class CriterionId { Thm3i, Thm3ii, Thm4i, Thm4ii, Remark3, Cor1, Cor2, Cor3, Cor4, Thm1a, Thm1b, Thm2a, Thm2b };

enum class ImpliedBound { SigmaGeRho, SigmaLeRho, SigmaEqRho, NecessaryHolds, NecessaryFails, NotApplicable };

inline constexpr CriterionId kAllCriteria[] = {
    CriterionId::Thm3i, CriterionId::Thm3ii, CriterionId::Thm4i, CriterionId::Thm4ii, CriterionId::Remark3,
    CriterionId::Cor1,  CriterionId::Cor2,   CriterionId::Cor3,  CriterionId::Cor4,   CriterionId::Thm1a,
    CriterionId::Thm1b, CriterionId::Thm2a,  CriterionId::Thm2b,
};

inline const char* to_string(CriterionId id) {
  switch (id) {
    case CriterionId::Thm3i: return "thm3i";
    case CriterionId::Thm3ii: return "thm3ii";
    case CriterionId::Thm4i: return "thm4i";
    case CriterionId::Thm4ii: return "thm4ii";
    case CriterionId::Remark3: return "remark3";
    case CriterionId::Cor1: return "cor1";
    case CriterionId::Cor2: return "cor2";
    case CriterionId::Cor3: return "cor3";
    case CriterionId::Cor4: return "cor4";
    case CriterionId::Thm1a: return "thm1a";
    case CriterionId::Thm1b: return "thm1b";
    case CriterionId::Thm2a: return "thm2a";
    case CriterionId::Thm2b: return "thm2b";
  }
  return "?";
}

inline CriterionId criterion_from_string(const std::string& s) {
  for (auto id : kAllCriteria)
    if (s == to_string(id)) return id;
  throw std::invalid_argument("unknown criterion: " + s);
}

inline const char* to_string(ImpliedBound b) {
  switch (b) {
    case ImpliedBound::SigmaGeRho: return "sigma>=rho";
    case ImpliedBound::SigmaLeRho: return "sigma<=rho";
    case ImpliedBound::SigmaEqRho: return "sigma=rho";
    case ImpliedBound::NecessaryHolds: return "necessary-condition-holds";
    case ImpliedBound::NecessaryFails: return "necessary-condition-fails";
    case ImpliedBound::NotApplicable: return "not-applicable";
  }
  return "?";
}

inline ImpliedBound implied_bound_from_string(const std::string& s) {
  for (auto b : {ImpliedBound::SigmaGeRho, ImpliedBound::SigmaLeRho, ImpliedBound::SigmaEqRho,
                 ImpliedBound::NecessaryHolds, ImpliedBound::NecessaryFails, ImpliedBound::NotApplicable})
    if (s == to_string(b)) return b;
  throw std::invalid_argument("unknown implied bound: " + s);
}

inline SeriesClass series_class_from_string(const std::string& s) {
  for (auto c : {SeriesClass::Convergent, SeriesClass::Divergent, SeriesClass::Inconclusive})
    if (s == to_string(c)) return c;
  throw std::invalid_argument("unknown verdict: " + s);
}

/// Fixed table. Inconclusive never implies anything.
///   necessary conditions (3i, 3ii, 1a): Convergent holds, Divergent fails
///   sufficient for sigma >= rho (4i, 4ii, Cor3, 2a): Convergent only
///   Remark 3 / Thm 1b: divergence gives sigma <= rho
///   Cor 1, 2, 4: divergence of sum (1 - F(+0)) gives sigma = 0
///   Thm 2b: necessary for sigma = -inf, which needs divergence
inline ImpliedBound implied_bound_table(CriterionId id, SeriesClass v) {
  if (v == SeriesClass::Inconclusive) return ImpliedBound::NotApplicable;
  const bool conv = v == SeriesClass::Convergent;
  switch (id) {
    case CriterionId::Thm3i:
    case CriterionId::Thm3ii:
    case CriterionId::Thm1a: return conv ? ImpliedBound::NecessaryHolds : ImpliedBound::NecessaryFails;
    case CriterionId::Thm4i:
    case CriterionId::Thm4ii:
    case CriterionId::Cor3:
    case CriterionId::Thm2a: return conv ? ImpliedBound::SigmaGeRho : ImpliedBound::NotApplicable;
    case CriterionId::Remark3: return conv ? ImpliedBound::NecessaryHolds : ImpliedBound::SigmaLeRho;
    case CriterionId::Thm1b: return conv ? ImpliedBound::NotApplicable : ImpliedBound::SigmaLeRho;
    case CriterionId::Cor1:
    case CriterionId::Cor2:
    case CriterionId::Cor4: return conv ? ImpliedBound::NotApplicable : ImpliedBound::SigmaEqRho;
    case CriterionId::Thm2b: return conv ? ImpliedBound::NecessaryFails : ImpliedBound::NecessaryHolds;
  }
  return ImpliedBound::NotApplicable;
}

struct CriterionReport {
  CriterionId id = CriterionId::Thm3i;
  double rho = 0.0;
  std::string eps_policy;  // e.g. "eps=0.25", "schedule=1/ln(k+e)", "delta=0.9", "E=2"
  SeriesVerdict verdict;
  ImpliedBound implied_bound = ImpliedBound::NotApplicable;
  bool hypotheses_hold = true;
  std::vector<std::string> notes;
  std::optional<double> f_plus0;  // Cor1/Cor2/Cor4/Remark3 at rho = 0
  std::optional<double> value_sum_route;
  std::optional<double> value_quadrature_route;

  double partial_sum_at_K() const { return verdict.final_sum(); }
};

namespace detail {

inline std::string num(double x) { return format_ext(x); }

inline CriterionReport finish_report(CriterionId id, double rho, std::string eps_policy, std::vector<double> terms,
                                     const SeriesPolicy& policy) {
  CriterionReport r;
  r.id = id;
  r.rho = rho;
  r.eps_policy = std::move(eps_policy);
  r.verdict = classify(terms, policy);
  r.implied_bound = implied_bound_table(id, r.verdict.cls);
  return r;
}

inline void require_deterministic(const CoefficientLaw& c, const char* who) {
  if (!c.is_deterministic()) throw std::invalid_argument(std::string(who) + ": needs deterministic coefficients");
}

inline void require_random(const CoefficientLaw& c, const char* who) {
  if (c.is_deterministic()) throw std::invalid_argument(std::string(who) + ": needs random-modulus coefficients");
}

inline void require_K(std::size_t K) {
  if (K < 1) throw std::invalid_argument("criterion: K_max must be >= 1");
}

// 1 - F clipped at 0 so rounding never produces a negative term
inline double upper_tail(double F) { return std::max(0.0, 1.0 - F); }

}  // namespace detail

/// Default delta grid 1e-3 .. 1e-12 for F(+0).
inline std::vector<double> default_delta_grid() {
  std::vector<double> g;
  for (int e = 3; e <= 12; ++e) g.push_back(std::pow(10.0, -e));
  return g;
}

struct PlusZero {
  double value = 0.0;
  bool stable = false;
};

/// F(+0) as the limit of F(delta) along a decreasing grid. Stable when the
/// last three values agree within 1e-6.
inline PlusZero f_plus_zero(const std::function<double(double)>& F, std::span<const double> grid) {
  if (grid.size() < 3) throw std::invalid_argument("F(+0): delta grid needs at least three points");
  std::vector<double> v;
  for (double d : grid) {
    if (!(d > 0.0)) throw std::invalid_argument("F(+0): delta grid must be positive");
    v.push_back(F(d));
  }
  const std::size_t n = v.size();
  const double hi = std::max({v[n - 1], v[n - 2], v[n - 3]});
  const double lo = std::min({v[n - 1], v[n - 2], v[n - 3]});
  return {v.back(), hi - lo <= 1e-6};
}

// ---------------------------------------------------------------------------
// Random exponents, deterministic coefficients.

/// Terms 1 - F_k(ln|f_k| / (-rho + eps)) = 1 - F_k(mu_k / (rho - eps)).
inline CriterionReport thm3_upper_sum(const ExponentLaw& exp_law, const CoefficientLaw& coeff, double rho, double eps,
                                      std::size_t K, const SeriesPolicy& policy = {}) {
  detail::require_deterministic(coeff, "thm3i");
  detail::require_K(K);
  if (!(rho > 0.0)) throw std::domain_error("thm3i: rho must be > 0");
  if (!(eps > 0.0 && eps < rho)) throw std::domain_error("thm3i: eps must lie in (0, rho)");
  std::vector<double> t(K);
  for (std::size_t k = 0; k < K; ++k) t[k] = detail::upper_tail(exp_law.cdf_at(k, coeff.neg_log(k) / (rho - eps)));
  return detail::finish_report(CriterionId::Thm3i, rho, "eps=" + detail::num(eps), std::move(t), policy);
}

/// The necessary condition quantifies over every eps in (0, rho): probe a
/// grid and report the first eps whose sum diverges, else the last one.
inline CriterionReport thm3_upper_any_eps(const ExponentLaw& exp_law, const CoefficientLaw& coeff, double rho,
                                          std::span<const double> eps_grid, std::size_t K,
                                          const SeriesPolicy& policy = {}) {
  if (eps_grid.empty()) throw std::invalid_argument("thm3i: empty eps grid");
  CriterionReport last;
  bool any_inconclusive = false;
  for (double e : eps_grid) {
    last = thm3_upper_sum(exp_law, coeff, rho, e, K, policy);
    if (last.verdict.cls == SeriesClass::Divergent) return last;
    any_inconclusive = any_inconclusive || last.verdict.cls == SeriesClass::Inconclusive;
  }
  if (any_inconclusive) {
    last.verdict.cls = SeriesClass::Inconclusive;
    last.implied_bound = ImpliedBound::NotApplicable;
  }
  last.eps_policy = "eps-grid(" + std::to_string(eps_grid.size()) + ")";
  return last;
}

/// eps_j = rho 2^-j, j = 1..n
inline std::vector<double> halving_eps_grid(double rho, int n = 10) {
  std::vector<double> g;
  for (int j = 1; j <= n; ++j) g.push_back(std::ldexp(std::abs(rho), -j));
  return g;
}

/// Terms F_k(ln|f_k| / (-rho + eps)) = F_k(-mu_k / (eps - rho)), rho <= 0.
inline CriterionReport thm3_lower_sum(const ExponentLaw& exp_law, const CoefficientLaw& coeff, double rho, double eps,
                                      std::size_t K, const SeriesPolicy& policy = {}) {
  detail::require_deterministic(coeff, "thm3ii");
  detail::require_K(K);
  if (!(rho <= 0.0)) throw std::domain_error("thm3ii: rho must be <= 0");
  if (!(eps > 0.0)) throw std::domain_error("thm3ii: eps must be > 0");
  std::vector<double> t(K);
  for (std::size_t k = 0; k < K; ++k) t[k] = exp_law.cdf_at(k, -coeff.neg_log(k) / (eps - rho));
  return detail::finish_report(CriterionId::Thm3ii, rho, "eps=" + detail::num(eps), std::move(t), policy);
}

enum class Side { Upper, Lower };

inline SequenceRule default_eps_schedule() { return SequenceRule::parse("1/ln(k+e)"); }

/// Theorem 4 with a schedule eps_k -> +0. Upper: rho > 0, terms
/// 1 - F_k(mu_k / (rho - eps_k)). Lower: rho <= 0, terms F_k(-mu_k / (eps_k - rho)).
inline CriterionReport thm4_sum(const ExponentLaw& exp_law, const CoefficientLaw& coeff, double rho,
                                const SequenceRule& eps_schedule, std::size_t K, Side side,
                                const SeriesPolicy& policy = {}) {
  detail::require_deterministic(coeff, "thm4");
  detail::require_K(K);
  if (side == Side::Upper && !(rho > 0.0)) throw std::domain_error("thm4i: rho must be > 0");
  if (side == Side::Lower && !(rho <= 0.0)) throw std::domain_error("thm4ii: rho must be <= 0");
  if (eps_schedule.vanishes() == false) throw std::domain_error("thm4: eps schedule must tend to 0");
  std::vector<double> t(K);
  std::size_t skipped = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const double e = eps_schedule(k);
    const double denom = -rho + e;
    if (!std::isfinite(denom)) throw std::domain_error("thm4: -rho + eps_k not finite at k=" + std::to_string(k));
    // upper side needs rho - eps_k > 0; the schedule only gets there eventually
    if (side == Side::Upper && denom >= 0.0) {
      t[k] = 0.0;
      ++skipped;
      continue;
    }
    if (denom == 0.0) throw std::domain_error("thm4: -rho + eps_k vanishes at k=" + std::to_string(k));
    const double x = -coeff.neg_log(k) / denom;
    const double F = exp_law.cdf_at(k, x);
    t[k] = side == Side::Upper ? detail::upper_tail(F) : F;
  }
  if (skipped == K) throw std::domain_error("thm4: eps_k >= rho for every k < K");
  auto r = detail::finish_report(side == Side::Upper ? CriterionId::Thm4i : CriterionId::Thm4ii, rho,
                                 "schedule=" + eps_schedule.to_string(), std::move(t), policy);
  if (skipped) r.notes.push_back("skipped " + std::to_string(skipped) + " indices with eps_k >= rho");
  return r;
}

/// Remark 3: rho > 0 terms 1 - F_k(mu_k / rho); rho = 0 terms 1 - F_k(+0).
inline CriterionReport remark3_sum(const ExponentLaw& exp_law, const CoefficientLaw& coeff, double rho, std::size_t K,
                                   std::span<const double> delta_grid = {}, const SeriesPolicy& policy = {}) {
  detail::require_deterministic(coeff, "remark3");
  detail::require_K(K);
  if (!(rho >= 0.0)) throw std::domain_error("remark3: rho must be >= 0");
  std::vector<double> t(K);
  if (rho > 0.0) {
    for (std::size_t k = 0; k < K; ++k) t[k] = detail::upper_tail(exp_law.cdf_at(k, coeff.neg_log(k) / rho));
    return detail::finish_report(CriterionId::Remark3, rho, "-", std::move(t), policy);
  }
  const auto grid_owned = default_delta_grid();
  const std::span<const double> grid = delta_grid.empty() ? std::span<const double>(grid_owned) : delta_grid;
  bool stable = true;
  for (std::size_t k = 0; k < K; ++k) {
    const auto p = f_plus_zero([&](double x) { return exp_law.cdf_at(k, x); }, grid);
    stable = stable && p.stable;
    t[k] = detail::upper_tail(p.value);
  }
  auto r = detail::finish_report(CriterionId::Remark3, 0.0, "F(+0)", std::move(t), policy);
  r.notes.push_back("boundary-case rho=0");
  if (!stable) {
    r.verdict.cls = SeriesClass::Inconclusive;
    r.implied_bound = ImpliedBound::NotApplicable;
    r.notes.push_back("F(+0) did not stabilise on the delta grid");
  }
  return r;
}

/// Corollary 1: liminf F_k(+0) < 1 and f_k -> 0 claim sigma = 0. The
/// verdict is that of sum (1 - F_k(+0)); the claim needs f_k -> 0.
inline CriterionReport cor1_check(const ExponentLaw& exp_law, const CoefficientLaw& coeff, std::size_t K,
                                  std::span<const double> delta_grid = {}, const SeriesPolicy& policy = {}) {
  auto r = remark3_sum(exp_law, coeff, 0.0, K, delta_grid, policy);
  r.id = CriterionId::Cor1;
  r.notes.clear();
  std::vector<double> fp(K);
  const auto grid_owned = default_delta_grid();
  const std::span<const double> grid = delta_grid.empty() ? std::span<const double>(grid_owned) : delta_grid;
  for (std::size_t k = 0; k < K; ++k)
    fp[k] = f_plus_zero([&](double x) { return exp_law.cdf_at(k, x); }, grid).value;
  const auto lim = tail_extremum(fp, TailKind::Liminf, {});
  r.f_plus0 = lim.value;
  r.implied_bound = implied_bound_table(CriterionId::Cor1, r.verdict.cls);
  if (r.verdict.cls == SeriesClass::Inconclusive) r.notes.push_back("F(+0) did not stabilise on the delta grid");
  if (!coeff.tends_to_zero()) {
    r.hypotheses_hold = false;
    r.implied_bound = ImpliedBound::NotApplicable;
    r.notes.push_back("hypothesis f_k -> 0 fails");
  }
  if (!(lim.value < 1.0)) {
    r.hypotheses_hold = false;
    r.notes.push_back("hypothesis liminf F_k(+0) < 1 fails");
  }
  return r;
}

/// F_k(x) <= F_a(x) for every grid point x >= 0 and every k < K.
inline bool cor2_domination(const ExponentLaw& exp_law, const CdfModel& dominating, std::span<const double> grid,
                            std::size_t K) {
  for (double x : grid) {
    if (x < 0.0) continue;
    const double Fa = dominating.cdf(x);
    for (std::size_t k = 0; k < K; ++k)
      if (exp_law.cdf_at(k, x) > Fa) return false;
  }
  return true;
}

/// Default probe grid for domination checks: 0 and 10^j, j = -6..6, with
/// half-steps.
inline std::vector<double> default_domination_grid() {
  std::vector<double> g{0.0};
  for (int j = -12; j <= 12; ++j) g.push_back(std::pow(10.0, j / 2.0));
  return g;
}

/// Corollary 2: domination by a positive a with F_a(+0) < 1 and f_k -> 0
/// claims sigma = 0. Verdict is that of sum (1 - F_a(+0)).
inline CriterionReport cor2_check(const ExponentLaw& exp_law, const CoefficientLaw& coeff, const CdfModel& dominating,
                                  std::size_t K, std::span<const double> grid = {},
                                  const SeriesPolicy& policy = {}) {
  detail::require_deterministic(coeff, "cor2");
  detail::require_K(K);
  const auto grid_owned = default_domination_grid();
  const std::span<const double> g = grid.empty() ? std::span<const double>(grid_owned) : grid;
  const auto dg = default_delta_grid();
  const auto fa0 = f_plus_zero([&](double x) { return dominating.cdf(x); }, dg);
  std::vector<double> t(K, detail::upper_tail(fa0.value));
  auto r = detail::finish_report(CriterionId::Cor2, 0.0, "F_a(+0)", std::move(t), policy);
  r.f_plus0 = fa0.value;
  if (!cor2_domination(exp_law, dominating, g, K)) {
    r.hypotheses_hold = false;
    r.implied_bound = ImpliedBound::NotApplicable;
    r.notes.push_back("F_k <= F_a fails on the probe grid");
  }
  if (!coeff.tends_to_zero()) {
    r.hypotheses_hold = false;
    r.implied_bound = ImpliedBound::NotApplicable;
    r.notes.push_back("hypothesis f_k -> 0 fails");
  }
  return r;
}

struct Cor3Result {
  double value_sum_route = 0.0;
  double value_quadrature_route = 0.0;
  CriterionReport report;
};

/// Corollary 3. Sum route: sum_k (1 - F_b(mu_k / rho)). Quadrature route:
/// left-tagged Riemann-Stieltjes sum of n_mu(t rho) against F_b on a grid of
/// F_b quantiles plus every jump mu_k / rho, and the mass above the last
/// grid point. n_mu(t rho) is constant on [t_i, t_{i+1}) and
/// F_b(t_{i+1}) - F_b(t_i) = P{t_i <= b < t_{i+1}}, so both routes agree up
/// to rounding.
inline Cor3Result cor3_integral(const CdfModel& F_b, const CoefficientLaw& coeff, double rho, std::size_t K,
                                const SeriesPolicy& policy = {}) {
  detail::require_deterministic(coeff, "cor3");
  detail::require_K(K);
  if (!(rho > 0.0)) throw std::domain_error("cor3: rho must be > 0");
  const auto mu = neg_log_sequence(coeff, K);

  std::vector<double> t(K);
  for (std::size_t k = 0; k < K; ++k) t[k] = detail::upper_tail(F_b.cdf(mu[k] / rho));
  Cor3Result res;
  res.report = detail::finish_report(CriterionId::Cor3, rho, "-", t, policy);
  {
    CompensatedSum s;
    for (double v : t) s.add(v);
    res.value_sum_route = s.value();
  }

  // n_mu(t rho) counted on the rescaled jumps mu_k / rho so grid points hit
  // them exactly
  std::vector<double> grid;
  grid.reserve(K + 110);
  for (double m : mu) grid.push_back(m / rho);
  const CountingFunction n(grid);
  std::vector<double> us{1e-6, 1e-3};
  for (int i = 1; i <= 99; ++i) us.push_back(i / 100.0);
  us.push_back(1.0 - 1e-3);
  us.push_back(1.0 - 1e-6);
  for (double u : us) grid.push_back(F_b.quantile(u));
  if (std::isfinite(F_b.support_lower())) grid.push_back(F_b.support_lower());
  if (std::isfinite(F_b.support_upper())) grid.push_back(F_b.support_upper());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  // below grid.front() n is 0 because every jump is a grid point
  CompensatedSum q;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double dF = F_b.cdf(grid[i + 1]) - F_b.cdf(grid[i]);
    if (dF > 0.0) q.add(static_cast<double>(n(grid[i])) * dF);
  }
  q.add(static_cast<double>(n(grid.back())) * (1.0 - F_b.cdf(grid.back())));
  res.value_quadrature_route = q.value();

  res.report.value_sum_route = res.value_sum_route;
  res.report.value_quadrature_route = res.value_quadrature_route;
  if (!coeff.tends_to_zero()) {
    res.report.hypotheses_hold = false;
    res.report.implied_bound = ImpliedBound::NotApplicable;
    res.report.notes.push_back("hypothesis f_k -> 0 fails");
  }
  return res;
}

inline bool cor4_monotone_check(const TrialDraw& draw) {
  return std::is_sorted(draw.lambdas.begin(), draw.lambdas.end());
}

/// Corollary 4: monotone exponents, F_0(+0) < 1 and f_k -> 0 claim sigma = 0.
/// `monotone` is the outcome of cor4_monotone_check on the realised draws.
inline CriterionReport cor4_check(const ExponentLaw& exp_law, const CoefficientLaw& coeff, bool monotone,
                                  std::size_t K, const SeriesPolicy& policy = {}) {
  detail::require_deterministic(coeff, "cor4");
  detail::require_K(K);
  const auto dg = default_delta_grid();
  const auto f0 = f_plus_zero([&](double x) { return exp_law.cdf_at(0, x); }, dg);
  std::vector<double> t(K, detail::upper_tail(f0.value));
  auto r = detail::finish_report(CriterionId::Cor4, 0.0, "F_0(+0)", std::move(t), policy);
  r.f_plus0 = f0.value;
  if (!monotone) {
    r.hypotheses_hold = false;
    r.implied_bound = ImpliedBound::NotApplicable;
    r.notes.push_back("exponents are not nondecreasing");
  }
  if (!coeff.tends_to_zero()) {
    r.hypotheses_hold = false;
    r.implied_bound = ImpliedBound::NotApplicable;
    r.notes.push_back("hypothesis f_k -> 0 fails");
  }
  return r;
}

inline CriterionReport cor4_check(const ExponentLaw& exp_law, const CoefficientLaw& coeff,
                                  std::span<const TrialDraw> draws, std::size_t K, const SeriesPolicy& policy = {}) {
  const bool monotone =
      !draws.empty() && std::all_of(draws.begin(), draws.end(), [](const TrialDraw& d) { return cor4_monotone_check(d); });
  return cor4_check(exp_law, coeff, monotone, K, policy);
}

// ---------------------------------------------------------------------------
// Random coefficient moduli, deterministic exponents.

namespace detail {

inline void require_deterministic_exponents(const ExponentLaw& e, const char* who) {
  if (!e.is_deterministic()) throw std::invalid_argument(std::string(who) + ": needs deterministic exponents");
}

// base^lambda with base > 0; overflow goes to +inf which F maps to 1
inline double pow_threshold(double base, double lambda) { return std::exp(lambda * std::log(base)); }

}  // namespace detail

/// part a: terms 1 - F_k((e^-rho + eps)^lambda_k), necessary for sigma >= rho.
inline CriterionReport thm1a_sum(const CoefficientLaw& coeff, const ExponentLaw& exp_law, double rho, double eps,
                                 std::size_t K, const SeriesPolicy& policy = {}) {
  detail::require_random(coeff, "thm1a");
  detail::require_deterministic_exponents(exp_law, "thm1a");
  detail::require_K(K);
  if (!(eps > 0.0)) throw std::domain_error("thm1a: eps must be > 0");
  if (!std::isfinite(rho)) throw std::domain_error("thm1a: rho must be finite");
  const double base = std::exp(-rho) + eps;
  std::vector<double> t(K);
  for (std::size_t k = 0; k < K; ++k)
    t[k] = detail::upper_tail(coeff.modulus_cdf(k, detail::pow_threshold(base, exp_law.scale_at(k))));
  return detail::finish_report(CriterionId::Thm1a, rho, "eps=" + detail::num(eps), std::move(t), policy);
}

/// part b: terms 1 - F_k(delta_k^lambda_k); divergence gives sigma <= rho
/// with rho = -ln(liminf delta_k).
inline CriterionReport thm1b_sum(const CoefficientLaw& coeff, const ExponentLaw& exp_law,
                                 const SequenceRule& delta_schedule, std::size_t K, const SeriesPolicy& policy = {}) {
  detail::require_random(coeff, "thm1b");
  detail::require_deterministic_exponents(exp_law, "thm1b");
  detail::require_K(K);
  std::vector<double> t(K), deltas(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double d = delta_schedule(k);
    if (!(d > 0.0) || !std::isfinite(d)) throw std::domain_error("thm1b: delta_k must be positive and finite");
    deltas[k] = d;
    t[k] = detail::upper_tail(coeff.modulus_cdf(k, detail::pow_threshold(d, exp_law.scale_at(k))));
  }
  const double lim = tail_extremum(deltas, TailKind::Liminf, {}).value;
  const double rho = -std::log(lim);
  return detail::finish_report(CriterionId::Thm1b, rho, "delta=" + delta_schedule.to_string(), std::move(t), policy);
}

/// Theorem 2 a: terms 1 - F_k((e^-rho + eps_k)^lambda_k), convergence gives sigma >= rho.
inline CriterionReport thm2a_sum(const CoefficientLaw& coeff, const ExponentLaw& exp_law, double rho,
                                 const SequenceRule& eps_schedule, std::size_t K, const SeriesPolicy& policy = {}) {
  detail::require_random(coeff, "thm2a");
  detail::require_deterministic_exponents(exp_law, "thm2a");
  detail::require_K(K);
  if (!std::isfinite(rho)) throw std::domain_error("thm2a: rho must be finite");
  if (!eps_schedule.vanishes()) throw std::domain_error("thm2a: eps schedule must tend to 0");
  const double e_rho = std::exp(-rho);
  std::vector<double> t(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double base = e_rho + eps_schedule(k);
    if (!(base > 0.0)) throw std::domain_error("thm2a: e^-rho + eps_k must be > 0");
    t[k] = detail::upper_tail(coeff.modulus_cdf(k, detail::pow_threshold(base, exp_law.scale_at(k))));
  }
  return detail::finish_report(CriterionId::Thm2a, rho, "schedule=" + eps_schedule.to_string(), std::move(t), policy);
}

/// Theorem 2 b: terms 1 - F_k(E^lambda_k), E > 1; necessary for sigma = -inf.
inline CriterionReport thm2b_sum(const CoefficientLaw& coeff, const ExponentLaw& exp_law, double E, std::size_t K,
                                 const SeriesPolicy& policy = {}) {
  detail::require_random(coeff, "thm2b");
  detail::require_deterministic_exponents(exp_law, "thm2b");
  detail::require_K(K);
  if (!(E > 1.0) || !std::isfinite(E)) throw std::domain_error("thm2b: E must be > 1");
  std::vector<double> t(K);
  for (std::size_t k = 0; k < K; ++k)
    t[k] = detail::upper_tail(coeff.modulus_cdf(k, detail::pow_threshold(E, exp_law.scale_at(k))));
  return detail::finish_report(CriterionId::Thm2b, kNegInf, "E=" + detail::num(E), std::move(t), policy);
}

}  // namespace dal
