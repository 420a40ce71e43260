#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dal {

/// Extended real number: a double where +inf / -inf are legitimate values
/// (abscissas and tail limits live in [-inf, +inf]). NaN is never a valid
/// ExtReal.
using ExtReal = double;

inline constexpr ExtReal kPosInf = std::numeric_limits<double>::infinity();
inline constexpr ExtReal kNegInf = -std::numeric_limits<double>::infinity();

inline bool is_sentinel(ExtReal v) { return std::isinf(v); }

/// Formats with 9 significant digits; sentinels render as `inf` / `-inf`.
inline std::string format_ext(ExtReal v) {
  if (v == kPosInf) return "inf";
  if (v == kNegInf) return "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline ExtReal parse_ext(std::string_view s) {
  if (s == "inf" || s == "+inf") return kPosInf;
  if (s == "-inf") return kNegInf;
  std::string tmp(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tmp, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + tmp + "'");
  }
  if (used != tmp.size()) throw std::invalid_argument("not a number: '" + tmp + "'");
  return v;
}

/// Neumaier-compensated running sum. Partial sums of long criterion series
/// are compared against closed forms at 1e-6, so naive accumulation is not
/// enough at K ~ 1e5.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace dal
