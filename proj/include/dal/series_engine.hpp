#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dal/ext_real.hpp"

namespace dal {

enum class SeriesClass { Convergent, Divergent, Inconclusive };

/// Which classification rule produced a verdict.
enum class SeriesRule {
  EventuallyZero,     // every term of the last quarter underflows to 0
  SumCap,             // partial sum exceeded the cap (or overflowed)
  NonVanishing,       // last-quarter terms do not shrink relative to the peak
  GeometricEnvelope,  // fitted ratio r <= 1 - geo_margin
  SlopeConvergent,    // term ~ k^-s with s >= 1 + slope_margin
  SlopeDivergent,     // term ~ k^-s with s <= 1
  CauchyTail,         // signed series: checkpoint differences below threshold
  NoRuleFired,
};

inline const char* to_string(SeriesClass c) {
  switch (c) {
    case SeriesClass::Convergent: return "Convergent";
    case SeriesClass::Divergent: return "Divergent";
    case SeriesClass::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline const char* to_string(SeriesRule r) {
  switch (r) {
    case SeriesRule::EventuallyZero: return "eventually_zero";
    case SeriesRule::SumCap: return "sum_cap";
    case SeriesRule::NonVanishing: return "non_vanishing";
    case SeriesRule::GeometricEnvelope: return "geometric_envelope";
    case SeriesRule::SlopeConvergent: return "slope_convergent";
    case SeriesRule::SlopeDivergent: return "slope_divergent";
    case SeriesRule::CauchyTail: return "cauchy_tail";
    case SeriesRule::NoRuleFired: return "no_rule_fired";
  }
  return "?";
}

struct SeriesPolicy {
  double slope_margin = 0.05;
  double geo_margin = 0.02;
  double sum_cap = 1e12;
  double nonvanishing_fraction = 0.1;
  std::size_t min_fit_points = 8;
  double cauchy_rel_threshold = 1e-8;
};

struct SeriesVerdict {
  SeriesClass cls = SeriesClass::Inconclusive;
  std::vector<std::pair<std::size_t, double>> partial_sums;  // (K_checkpoint, S_K)
  double tail_slope = std::nan("");  // s in term ~ C k^-s, NaN if not fitted
  SeriesRule rule = SeriesRule::NoRuleFired;

  double final_sum() const { return partial_sums.empty() ? 0.0 : partial_sums.back().second; }
};

namespace detail {

inline std::vector<std::size_t> checkpoints(std::size_t K) {
  std::vector<std::size_t> c;
  for (std::size_t d : {16u, 8u, 4u, 2u, 1u}) {
    const std::size_t s = K / d;
    if (s >= 1 && (c.empty() || s > c.back())) c.push_back(s);
  }
  return c;
}

// Least-squares slope of y against x.
inline double ls_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxx > 0 ? sxy / sxx : std::nan("");
}

}  // namespace detail

/// Three-way convergence verdict for a nonnegative series given by the
/// logarithms of its terms (-inf encodes an exact zero term).
///
/// Rules, in order: eventually-zero, sum cap, non-vanishing terms,
/// geometric envelope, power-law slope band. Nothing here decides
/// convergence; the margins keep borderline tails Inconclusive.
inline SeriesVerdict classify_log(std::span<const double> log_terms, const SeriesPolicy& policy = {}) {
  const std::size_t K = log_terms.size();
  if (K == 0) throw std::invalid_argument("classify: empty series");
  for (double l : log_terms)
    if (std::isnan(l)) throw std::domain_error("classify: term is NaN");

  SeriesVerdict v;
  const auto cps = detail::checkpoints(K);
  {
    CompensatedSum sum;
    std::size_t next = 0;
    for (std::size_t k = 0; k < K; ++k) {
      sum.add(std::exp(log_terms[k]));
      if (next < cps.size() && k + 1 == cps[next]) v.partial_sums.emplace_back(cps[next++], sum.value());
    }
  }

  const std::size_t q_start = K - std::max<std::size_t>(K / 4, 1);
  const std::size_t h_start = K - std::max<std::size_t>(K / 2, 1);

  double last_quarter_max = kNegInf;
  for (std::size_t k = q_start; k < K; ++k) last_quarter_max = std::max(last_quarter_max, log_terms[k]);
  double overall_max = kNegInf;
  for (double l : log_terms) overall_max = std::max(overall_max, l);

  if (std::exp(last_quarter_max) == 0.0) {
    v.cls = SeriesClass::Convergent;
    v.rule = SeriesRule::EventuallyZero;
    return v;
  }
  const double S = v.final_sum();
  if (!std::isfinite(S) || S > policy.sum_cap) {
    v.cls = SeriesClass::Divergent;
    v.rule = SeriesRule::SumCap;
    return v;
  }
  if (last_quarter_max >= overall_max + std::log(policy.nonvanishing_fraction)) {
    v.cls = SeriesClass::Divergent;
    v.rule = SeriesRule::NonVanishing;
    return v;
  }

  std::vector<double> ks, lnks, ls;
  for (std::size_t k = std::max<std::size_t>(h_start, 1); k < K; ++k) {
    if (!std::isfinite(log_terms[k])) continue;
    ks.push_back(static_cast<double>(k));
    lnks.push_back(std::log(static_cast<double>(k)));
    ls.push_back(log_terms[k]);
  }
  if (ks.size() < policy.min_fit_points) return v;

  const double log_ratio = detail::ls_slope(ks, ls);
  const double s = -detail::ls_slope(lnks, ls);
  v.tail_slope = s;
  if (log_ratio <= std::log1p(-policy.geo_margin)) {
    v.cls = SeriesClass::Convergent;
    v.rule = SeriesRule::GeometricEnvelope;
  } else if (s >= 1.0 + policy.slope_margin) {
    v.cls = SeriesClass::Convergent;
    v.rule = SeriesRule::SlopeConvergent;
  } else if (s <= 1.0) {
    v.cls = SeriesClass::Divergent;
    v.rule = SeriesRule::SlopeDivergent;
  }
  return v;
}

/// Nonnegative terms given directly.
inline SeriesVerdict classify(std::span<const double> terms, const SeriesPolicy& policy = {}) {
  std::vector<double> logs(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (terms[k] < 0.0) throw std::domain_error("classify: negative term at k=" + std::to_string(k));
    logs[k] = std::log(terms[k]);
  }
  return classify_log(logs, policy);
}

/// Convergence of a real series with arbitrary signs. Nonnegative input is
/// delegated to classify(); otherwise the Cauchy test compares checkpoint
/// partial sums in the last half against 1e-8 (1 + |S_K|).
inline SeriesVerdict classify_signed(std::span<const double> terms, const SeriesPolicy& policy = {}) {
  if (std::all_of(terms.begin(), terms.end(), [](double t) { return t >= 0.0; })) return classify(terms, policy);
  const std::size_t K = terms.size();
  SeriesVerdict v;
  std::vector<double> mods(K);
  for (std::size_t k = 0; k < K; ++k) mods[k] = std::abs(terms[k]);
  const auto abs_verdict = classify(mods, policy);
  if (abs_verdict.cls == SeriesClass::Convergent) {
    v = abs_verdict;
  }
  // partial sums of the signed series
  v.partial_sums.clear();
  const auto cps = detail::checkpoints(K);
  CompensatedSum sum;
  std::size_t next = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (std::isnan(terms[k])) throw std::domain_error("classify: term is NaN");
    sum.add(terms[k]);
    if (next < cps.size() && k + 1 == cps[next]) v.partial_sums.emplace_back(cps[next++], sum.value());
  }
  if (abs_verdict.cls == SeriesClass::Convergent) return v;
  v.tail_slope = abs_verdict.tail_slope;
  const double S = v.final_sum();
  if (!std::isfinite(S) || std::abs(S) > policy.sum_cap) {
    v.cls = SeriesClass::Divergent;
    v.rule = SeriesRule::SumCap;
    return v;
  }
  if (abs_verdict.rule == SeriesRule::NonVanishing || abs_verdict.rule == SeriesRule::SumCap) {
    v.cls = SeriesClass::Divergent;
    v.rule = SeriesRule::NonVanishing;
    return v;
  }
  double max_diff = 0.0;
  for (std::size_t i = 0; i < v.partial_sums.size(); ++i) {
    if (v.partial_sums[i].first < K / 2) continue;
    for (std::size_t j = i + 1; j < v.partial_sums.size(); ++j)
      max_diff = std::max(max_diff, std::abs(v.partial_sums[j].second - v.partial_sums[i].second));
  }
  if (max_diff < policy.cauchy_rel_threshold * (1.0 + std::abs(S))) {
    v.cls = SeriesClass::Convergent;
    v.rule = SeriesRule::CauchyTail;
  } else {
    v.cls = SeriesClass::Inconclusive;
    v.rule = SeriesRule::NoRuleFired;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Abscissa estimation by bisection on the real parameter x.

/// How an Inconclusive verdict at a probe point is resolved.
enum class InconclusivePolicy {
  ConservativeDown,  // treat as Divergent (lower estimate)
  ConservativeUp,    // treat as Convergent (upper estimate)
  Midpoint,          // locate both edges of the inconclusive band, report its centre
};

inline const char* to_string(InconclusivePolicy p) {
  switch (p) {
    case InconclusivePolicy::ConservativeDown: return "conservative_down";
    case InconclusivePolicy::ConservativeUp: return "conservative_up";
    case InconclusivePolicy::Midpoint: return "midpoint";
  }
  return "?";
}

struct BisectionOptions {
  double x_lo = -50.0;
  double x_hi = 50.0;
  double tol = 0.01;
  int max_iter = 60;
  InconclusivePolicy policy = InconclusivePolicy::Midpoint;
  SeriesPolicy series;
};

struct AbscissaEstimate {
  ExtReal value = 0.0;
  double x_lo = 0.0;  // last point treated as Convergent
  double x_hi = 0.0;  // last point treated as Divergent
  SeriesClass verdict_lo = SeriesClass::Inconclusive;
  SeriesClass verdict_hi = SeriesClass::Inconclusive;
  int iterations = 0;
  InconclusivePolicy policy = InconclusivePolicy::Midpoint;
  // Midpoint policy: [first point treated Divergent when Inconclusive counts
  // as Divergent, last point Convergent when it counts as Convergent].
  std::optional<std::pair<double, double>> inconclusive_band;
};

/// Bisection for the boundary between Convergent (small x) and Divergent
/// (large x). `probe` must be monotone in that sense for the answer to be
/// meaningful; probes are cached so each x is classified once.
inline AbscissaEstimate estimate_abscissa(const std::function<SeriesVerdict(double)>& probe,
                                          const BisectionOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("bisection tolerance must be > 0");
  if (!(opt.x_lo < opt.x_hi)) throw std::invalid_argument("bisection range must satisfy x_lo < x_hi");
  std::map<double, SeriesClass> cache;
  int evaluations = 0;
  auto classify_at = [&](double x) {
    auto it = cache.find(x);
    if (it != cache.end()) return it->second;
    ++evaluations;
    const SeriesClass c = probe(x).cls;
    cache.emplace(x, c);
    return c;
  };

  AbscissaEstimate est;
  est.policy = opt.policy;
  const SeriesClass at_hi = classify_at(opt.x_hi);
  const SeriesClass at_lo = classify_at(opt.x_lo);

  struct Edge {
    double lo, hi;
    SeriesClass vlo, vhi;
  };
  auto run = [&](bool inconclusive_converges) -> Edge {
    auto converges = [&](SeriesClass c) {
      return c == SeriesClass::Convergent || (inconclusive_converges && c == SeriesClass::Inconclusive);
    };
    Edge e{opt.x_lo, opt.x_hi, at_lo, at_hi};
    if (converges(at_hi)) return {opt.x_hi, opt.x_hi, at_hi, at_hi};
    if (!converges(at_lo)) return {opt.x_lo, opt.x_lo, at_lo, at_lo};
    for (int i = 0; i < opt.max_iter && e.hi - e.lo > opt.tol; ++i) {
      const double mid = 0.5 * (e.lo + e.hi);
      const SeriesClass c = classify_at(mid);
      if (converges(c)) {
        e.lo = mid;
        e.vlo = c;
      } else {
        e.hi = mid;
        e.vhi = c;
      }
    }
    return e;
  };

  auto finish = [&](const Edge& e, bool inconclusive_converges) -> ExtReal {
    auto converges = [&](SeriesClass c) {
      return c == SeriesClass::Convergent || (inconclusive_converges && c == SeriesClass::Inconclusive);
    };
    if (e.lo == opt.x_hi && converges(at_hi)) return kPosInf;
    if (e.hi == opt.x_lo && !converges(at_lo)) return kNegInf;
    // smallest probed x with a divergence verdict; within tol of the root
    return e.hi;
  };

  switch (opt.policy) {
    case InconclusivePolicy::ConservativeDown:
    case InconclusivePolicy::ConservativeUp: {
      const bool up = opt.policy == InconclusivePolicy::ConservativeUp;
      const Edge e = run(up);
      est.value = finish(e, up);
      est.x_lo = e.lo;
      est.x_hi = e.hi;
      est.verdict_lo = e.vlo;
      est.verdict_hi = e.vhi;
      break;
    }
    case InconclusivePolicy::Midpoint: {
      const Edge down = run(false);
      const Edge up = run(true);
      const ExtReal a = finish(down, false);
      const ExtReal b = finish(up, true);
      if (a == b && is_sentinel(a)) {
        est.value = a;
      } else {
        // a sentinel on one side only: fall back to the finite edge
        const double fa = is_sentinel(a) ? (a > 0 ? opt.x_hi : opt.x_lo) : a;
        const double fb = is_sentinel(b) ? (b > 0 ? opt.x_hi : opt.x_lo) : b;
        est.value = 0.5 * (fa + fb);
      }
      est.x_lo = down.lo;
      est.verdict_lo = down.vlo;
      est.x_hi = up.hi;
      est.verdict_hi = up.vhi;
      if (up.lo > down.hi) est.inconclusive_band = std::make_pair(down.hi, up.lo);
      break;
    }
  }
  est.iterations = evaluations;
  return est;
}

/// Log-terms -mu_k + x lambda_k of the series sum |f_k| e^{x lambda_k}.
inline std::vector<double> dirichlet_log_terms(std::span<const double> mu, std::span<const double> lambdas, double x) {
  if (mu.size() != lambdas.size()) throw std::invalid_argument("dirichlet terms: length mismatch");
  std::vector<double> l(mu.size());
  for (std::size_t k = 0; k < l.size(); ++k) l[k] = -mu[k] + x * lambdas[k];
  return l;
}

/// Abscissa of absolute convergence of sum |f_k| e^{x lambda_k}.
inline AbscissaEstimate sigma_abs(std::span<const double> mu, std::span<const double> lambdas,
                                  const BisectionOptions& opt = {}) {
  return estimate_abscissa(
      [&](double x) { return classify_log(dirichlet_log_terms(mu, lambdas, x), opt.series); }, opt);
}

/// Abscissa of convergence of sum f_k e^{x lambda_k} with f_k = sign_k |f_k|.
/// An empty `signs` span means all coefficients are positive, in which case
/// this coincides with sigma_abs.
inline AbscissaEstimate sigma_conv(std::span<const double> mu, std::span<const double> lambdas,
                                   std::span<const double> signs = {}, const BisectionOptions& opt = {}) {
  if (signs.empty()) return sigma_abs(mu, lambdas, opt);
  if (signs.size() != mu.size()) throw std::invalid_argument("sigma_conv: sign length mismatch");
  return estimate_abscissa(
      [&](double x) {
        const auto logs = dirichlet_log_terms(mu, lambdas, x);
        std::vector<double> t(logs.size());
        for (std::size_t k = 0; k < t.size(); ++k) t[k] = signs[k] * std::exp(logs[k]);
        return classify_signed(t, opt.series);
      },
      opt);
}

/// sum |f_k|^{1-gamma} e^{-delta lambda_k}
inline SeriesVerdict zad_condition(std::span<const double> mu, std::span<const double> lambdas, double gamma,
                                   double delta, const SeriesPolicy& policy = {}) {
  if (mu.size() != lambdas.size()) throw std::invalid_argument("zad_condition: length mismatch");
  std::vector<double> l(mu.size());
  for (std::size_t k = 0; k < l.size(); ++k) l[k] = -(1.0 - gamma) * mu[k] - delta * lambdas[k];
  return classify_log(l, policy);
}

/// gamma * alpha0 - delta when the weighted series converges, otherwise
/// nullopt (the bound does not apply).
inline std::optional<ExtReal> prop1_lower_bound(ExtReal alpha0_value, double gamma, double delta,
                                                const SeriesVerdict& zad) {
  if (!(gamma > 0.0)) throw std::domain_error("prop1_lower_bound: gamma must be > 0");
  if (zad.cls != SeriesClass::Convergent) return std::nullopt;
  if (is_sentinel(alpha0_value)) return alpha0_value;
  return gamma * alpha0_value - delta;
}

}  // namespace dal
