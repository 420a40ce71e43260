#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dal/ext_real.hpp"
#include "dal/laws.hpp"

namespace dal {

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TailKind { Liminf, Limsup };
enum class Trend { Stable, Drifting, Oscillating };

inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::Stable: return "stable";
    case Trend::Drifting: return "drifting";
    case Trend::Oscillating: return "oscillating";
  }
  return "?";
}

struct WindowPoint {
  std::size_t start;
  double extremum;  // NaN when the window holds no usable index
  bool operator==(const WindowPoint&) const = default;
};

/// Finite-truncation estimate of a liminf / limsup.
struct TailEstimate {
  TailKind kind = TailKind::Liminf;
  ExtReal value = 0.0;
  std::vector<WindowPoint> window_trace;
  std::size_t K = 0;
  Trend trend = Trend::Stable;
  std::size_t skipped = 0;  // indices where the ratio is undefined

  bool operator==(const TailEstimate&) const = default;
};

struct TailOptions {
  double cap = 1e9;             // |extremum| beyond this is reported as +-inf
  double trend_tol = 0.02;      // last three windows closer than this => Stable
  double escape_floor = 1e3;    // escape test only applies above this magnitude
  double escape_growth = 1.5;   // block-to-block growth that signals escape
};

/// Window starts w; the extremum is taken over k in [w, K). Default is the
/// geometric schedule {K/16, K/8, K/4, K/2}.
inline std::vector<std::size_t> default_windows(std::size_t K) {
  std::vector<std::size_t> w;
  for (std::size_t d : {16u, 8u, 4u, 2u}) {
    const std::size_t s = K / d;
    if (w.empty() || s > w.back()) w.push_back(s);
  }
  if (w.empty()) w.push_back(0);
  return w;
}

namespace detail {

inline bool better(TailKind kind, double candidate, double current) {
  return kind == TailKind::Liminf ? candidate < current : candidate > current;
}

inline double block_extremum(std::span<const double> a, std::size_t lo, std::size_t hi, TailKind kind) {
  double best = std::nan("");
  for (std::size_t k = lo; k < hi; ++k) {
    if (std::isnan(a[k])) continue;
    if (std::isnan(best) || better(kind, a[k], best)) best = a[k];
  }
  return best;
}

}  // namespace detail

/// Tail extremum trace of a sequence; NaN entries are skipped.
inline TailEstimate tail_extremum(std::span<const double> a, TailKind kind, std::vector<std::size_t> windows,
                                  const TailOptions& opt = {}) {
  const std::size_t K = a.size();
  if (K == 0) throw EstimationError("empty tail: no terms");
  if (windows.empty()) windows = default_windows(K);
  for (auto& w : windows) w = std::min(w, K - 1);
  std::sort(windows.begin(), windows.end());
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());

  TailEstimate est;
  est.kind = kind;
  est.K = K;
  est.skipped = static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [](double v) { return std::isnan(v); }));

  // One backward pass: running extremum of the suffix, read off at each start.
  std::vector<double> at(windows.size(), std::nan(""));
  double running = std::nan("");
  std::size_t next = windows.size();
  for (std::size_t k = K; k-- > 0;) {
    if (!std::isnan(a[k]) && (std::isnan(running) || detail::better(kind, a[k], running))) running = a[k];
    while (next > 0 && windows[next - 1] == k) at[--next] = running;
  }
  for (std::size_t i = 0; i < windows.size(); ++i) est.window_trace.push_back({windows[i], at[i]});

  const double last = at.back();
  if (std::isnan(last)) throw EstimationError("empty tail: every ratio in the last window is undefined");
  est.value = last;

  bool escaped = false;
  if (last > opt.cap) {
    est.value = kPosInf;
    escaped = true;
  } else if (last < -opt.cap) {
    est.value = kNegInf;
    escaped = true;
  } else if (windows.size() >= 2) {
    const std::size_t n = windows.size();
    const double prev_block = detail::block_extremum(a, windows[n - 2], windows[n - 1], kind);
    const double last_block = detail::block_extremum(a, windows[n - 1], K, kind);
    if (!std::isnan(prev_block) && !std::isnan(last_block) && std::abs(last_block) >= opt.escape_floor &&
        (last_block > 0) == (prev_block > 0) && std::abs(last_block) >= opt.escape_growth * std::abs(prev_block)) {
      est.value = last_block > 0 ? kPosInf : kNegInf;
      escaped = true;
    }
  }

  if (escaped) {
    est.trend = Trend::Drifting;
  } else {
    const std::size_t n = at.size();
    const std::size_t from = n >= 3 ? n - 3 : 0;
    double lo = at[from], hi = at[from];
    bool any_nan = false;
    for (std::size_t i = from; i < n; ++i) {
      if (std::isnan(at[i])) { any_nan = true; continue; }
      lo = std::isnan(lo) ? at[i] : std::min(lo, at[i]);
      hi = std::isnan(hi) ? at[i] : std::max(hi, at[i]);
    }
    if (!any_nan && hi - lo < opt.trend_tol) {
      est.trend = Trend::Stable;
    } else {
      // Disjoint block extrema: monotone => Drifting, otherwise Oscillating.
      std::vector<double> blocks;
      for (std::size_t i = from; i < n; ++i) {
        const std::size_t hi_idx = i + 1 < n ? windows[i + 1] : K;
        const double b = detail::block_extremum(a, windows[i], hi_idx, kind);
        if (!std::isnan(b)) blocks.push_back(b);
      }
      const bool up = std::is_sorted(blocks.begin(), blocks.end());
      const bool down = std::is_sorted(blocks.rbegin(), blocks.rend());
      est.trend = (up || down) ? Trend::Drifting : Trend::Oscillating;
    }
  }
  return est;
}

/// Window-monotonicity invariant: liminf traces nondecreasing in w, limsup
/// traces nonincreasing.
inline bool trace_is_monotone(const TailEstimate& e) {
  double prev = std::nan("");
  for (const auto& p : e.window_trace) {
    if (std::isnan(p.extremum)) continue;
    if (!std::isnan(prev)) {
      if (e.kind == TailKind::Liminf && p.extremum < prev) return false;
      if (e.kind == TailKind::Limsup && p.extremum > prev) return false;
    }
    prev = p.extremum;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Tail quantities on explicit sequences.
// mu[k] = -ln|f_k|, lambdas[k] = lambda_k.

/// alpha_0 = liminf mu_k / lambda_k (lambda_k = 0 skipped).
inline TailEstimate alpha0(std::span<const double> mu, std::span<const double> lambdas,
                           std::vector<std::size_t> windows = {}, const TailOptions& opt = {}) {
  if (mu.size() != lambdas.size()) throw std::invalid_argument("alpha0: length mismatch");
  std::vector<double> r(mu.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = lambdas[k] == 0.0 ? std::nan("") : mu[k] / lambdas[k];
  return tail_extremum(r, TailKind::Liminf, std::move(windows), opt);
}

/// tau = limsup ln k / lambda_k (k = 0 and lambda_k = 0 skipped).
inline TailEstimate tau(std::span<const double> lambdas, std::vector<std::size_t> windows = {},
                        const TailOptions& opt = {}) {
  std::vector<double> r(lambdas.size());
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = (k == 0 || lambdas[k] == 0.0) ? std::nan("") : std::log(static_cast<double>(k)) / lambdas[k];
  return tail_extremum(r, TailKind::Limsup, std::move(windows), opt);
}

/// h = limsup ln k / mu_k (k = 0 and mu_k = 0 skipped).
inline TailEstimate h_coeff(std::span<const double> mu, std::vector<std::size_t> windows = {},
                            const TailOptions& opt = {}) {
  std::vector<double> r(mu.size());
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = (k == 0 || mu[k] == 0.0) ? std::nan("") : std::log(static_cast<double>(k)) / mu[k];
  return tail_extremum(r, TailKind::Limsup, std::move(windows), opt);
}

/// liminf ((gamma - 1) ln|f_k| + delta lambda_k) / ln k; the sufficient
/// condition for the weighted series holds iff the value exceeds 1.
inline TailEstimate h_gamma_delta(std::span<const double> mu, std::span<const double> lambdas, double gamma,
                                  double delta, std::vector<std::size_t> windows = {}, const TailOptions& opt = {}) {
  if (mu.size() != lambdas.size()) throw std::invalid_argument("h_gamma_delta: length mismatch");
  std::vector<double> r(mu.size());
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = k <= 1 ? std::nan("")
                  : ((1.0 - gamma) * mu[k] + delta * lambdas[k]) / std::log(static_cast<double>(k));
  return tail_extremum(r, TailKind::Liminf, std::move(windows), opt);
}

inline bool h_gamma_delta_holds(const TailEstimate& e) { return e.value > 1.0; }

struct CoefCondition {
  bool holds = false;
  TailEstimate estimate;
};

/// ln k = o(ln|f_k|): tail-sup of ln k / |mu_k| below `tolerance` with a
/// stable trend.
inline CoefCondition coef_condition(std::span<const double> mu, double tolerance = 0.01,
                                    std::vector<std::size_t> windows = {}, const TailOptions& opt = {}) {
  std::vector<double> r(mu.size());
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = (k == 0 || mu[k] == 0.0) ? std::nan("") : std::log(static_cast<double>(k)) / std::abs(mu[k]);
  CoefCondition c;
  c.estimate = tail_extremum(r, TailKind::Limsup, std::move(windows), opt);
  c.holds = c.estimate.value < tolerance && c.estimate.trend == Trend::Stable;
  return c;
}

/// Deterministic-law convenience: evaluates mu_k for k < K first.
inline std::vector<double> neg_log_sequence(const CoefficientLaw& coeff, std::size_t K) {
  std::vector<double> mu(K);
  for (std::size_t k = 0; k < K; ++k) mu[k] = coeff.neg_log(k);
  return mu;
}

inline TailEstimate alpha0(const CoefficientLaw& coeff, const TrialDraw& draw,
                           std::vector<std::size_t> windows = {}, const TailOptions& opt = {}) {
  const auto mu = neg_log_coefficients(coeff, draw);
  return alpha0(mu, draw.lambdas, std::move(windows), opt);
}

inline TailEstimate tau(const TrialDraw& draw, std::vector<std::size_t> windows = {}, const TailOptions& opt = {}) {
  return tau(draw.lambdas, std::move(windows), opt);
}

inline TailEstimate h_coeff(const CoefficientLaw& coeff, std::size_t K, std::vector<std::size_t> windows = {},
                            const TailOptions& opt = {}) {
  const auto mu = neg_log_sequence(coeff, K);
  return h_coeff(mu, std::move(windows), opt);
}

inline CoefCondition coef_condition(const CoefficientLaw& coeff, std::size_t K, double tolerance = 0.01) {
  const auto mu = neg_log_sequence(coeff, K);
  return coef_condition(mu, tolerance);
}

/// n_mu(t) = #{k < K : mu_k <= t}, right-continuous step function.
class CountingFunction {
 public:
  explicit CountingFunction(std::vector<double> mu) : sorted_(std::move(mu)) {
    std::sort(sorted_.begin(), sorted_.end());
  }
  static CountingFunction of(const CoefficientLaw& coeff, std::size_t K) {
    return CountingFunction(neg_log_sequence(coeff, K));
  }

  std::size_t operator()(double t) const {
    return static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin());
  }

  /// Jump locations (sorted, with multiplicity).
  const std::vector<double>& jumps() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

}  // namespace dal
