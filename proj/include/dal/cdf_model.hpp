#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>

#include <boost/math/special_functions/erf.hpp>

#include "dal/ext_real.hpp"

namespace dal {

/// A one-dimensional distribution law.
///
/// `cdf` uses the left-continuous convention F(x) = P{X < x}: at an atom p,
/// F(p) excludes the mass at p. All criterion sums are written against this
/// convention, so a Degenerate(5) law has F(5) = 0 and F(5 + d) = 1.
///
/// Parameters are validated at construction; evaluation never yields NaN
/// for finite or infinite x.
class CdfModel {
 public:
  struct Exponential {
    double rate;
  };
  struct Uniform {
    double a, b;
  };
  struct Pareto {
    double scale, shape;
  };
  struct LogNormal {
    double mu, sigma;
  };
  struct Degenerate {
    double point;
  };
  struct Scaled {
    std::shared_ptr<const CdfModel> base;
    double factor;
  };
  struct Shifted {
    std::shared_ptr<const CdfModel> base;
    double offset;
  };
  using Family = std::variant<Exponential, Uniform, Pareto, LogNormal, Degenerate, Scaled, Shifted>;

  static CdfModel exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("exponential: rate must be > 0");
    return CdfModel(Exponential{rate});
  }
  static CdfModel uniform(double a, double b) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("uniform: need a < b");
    return CdfModel(Uniform{a, b});
  }
  static CdfModel pareto(double scale, double shape) {
    if (!(scale > 0.0) || !(shape > 0.0) || !std::isfinite(scale) || !std::isfinite(shape))
      throw std::invalid_argument("pareto: scale and shape must be > 0");
    return CdfModel(Pareto{scale, shape});
  }
  static CdfModel lognormal(double mu, double sigma) {
    if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("lognormal: sigma must be > 0");
    return CdfModel(LogNormal{mu, sigma});
  }
  static CdfModel degenerate(double point) {
    if (!std::isfinite(point)) throw std::invalid_argument("degenerate: point must be finite");
    return CdfModel(Degenerate{point});
  }
  static CdfModel scaled(CdfModel base, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) throw std::invalid_argument("scaled: factor must be > 0");
    return CdfModel(Scaled{std::make_shared<const CdfModel>(std::move(base)), factor});
  }
  static CdfModel shifted(CdfModel base, double offset) {
    if (!std::isfinite(offset)) throw std::invalid_argument("shifted: offset must be finite");
    return CdfModel(Shifted{std::make_shared<const CdfModel>(std::move(base)), offset});
  }

  const Family& family() const { return family_; }

  /// P{X < x}
  double cdf(double x) const {
    return std::visit([x](const auto& f) { return eval(f, x); }, family_);
  }

  /// inf{x : F(x+) >= u} for u in (0, 1).
  double quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile: u must lie in (0, 1)");
    return std::visit([u](const auto& f) { return inverse(f, u); }, family_);
  }

  /// False iff the law has an atom (Degenerate, possibly wrapped).
  bool is_continuous() const {
    return std::visit(
        [](const auto& f) -> bool {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Degenerate>) return false;
          else if constexpr (std::is_same_v<T, Scaled> || std::is_same_v<T, Shifted>) return f.base->is_continuous();
          else return true;
        },
        family_);
  }

  /// Infimum of the support.
  double support_lower() const {
    return std::visit(
        [](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Exponential>) return 0.0;
          else if constexpr (std::is_same_v<T, Uniform>) return f.a;
          else if constexpr (std::is_same_v<T, Pareto>) return f.scale;
          else if constexpr (std::is_same_v<T, LogNormal>) return 0.0;
          else if constexpr (std::is_same_v<T, Degenerate>) return f.point;
          else if constexpr (std::is_same_v<T, Scaled>) return f.factor * f.base->support_lower();
          else return f.base->support_lower() + f.offset;
        },
        family_);
  }

  /// Supremum of the support (may be +inf).
  double support_upper() const {
    return std::visit(
        [](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Uniform>) return f.b;
          else if constexpr (std::is_same_v<T, Degenerate>) return f.point;
          else if constexpr (std::is_same_v<T, Scaled>) return f.factor * f.base->support_upper();
          else if constexpr (std::is_same_v<T, Shifted>) return f.base->support_upper() + f.offset;
          else return kPosInf;
        },
        family_);
  }

  /// True if this is Uniform, possibly under scaling/shifting (the families
  /// for which the pairwise construction is offered).
  bool is_uniform_based() const {
    return std::visit(
        [](const auto& f) -> bool {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Uniform>) return true;
          else if constexpr (std::is_same_v<T, Scaled> || std::is_same_v<T, Shifted>) return f.base->is_uniform_based();
          else return false;
        },
        family_);
  }

  std::string describe() const;

 private:
  explicit CdfModel(Family f) : family_(std::move(f)) {}

  static double eval(const Exponential& f, double x) { return x <= 0.0 ? 0.0 : -std::expm1(-f.rate * x); }
  static double eval(const Uniform& f, double x) {
    if (x <= f.a) return 0.0;
    if (x >= f.b) return 1.0;
    return (x - f.a) / (f.b - f.a);
  }
  static double eval(const Pareto& f, double x) {
    if (x <= f.scale) return 0.0;
    if (x == kPosInf) return 1.0;
    return -std::expm1(f.shape * std::log(f.scale / x));
  }
  static double eval(const LogNormal& f, double x) {
    if (x <= 0.0) return 0.0;
    if (x == kPosInf) return 1.0;
    return 0.5 * std::erfc(-(std::log(x) - f.mu) / (f.sigma * std::numbers::sqrt2));
  }
  static double eval(const Degenerate& f, double x) { return x > f.point ? 1.0 : 0.0; }
  static double eval(const Scaled& f, double x) { return f.base->cdf(x / f.factor); }
  static double eval(const Shifted& f, double x) { return f.base->cdf(x - f.offset); }

  static double inverse(const Exponential& f, double u) { return -std::log1p(-u) / f.rate; }
  static double inverse(const Uniform& f, double u) { return f.a + u * (f.b - f.a); }
  static double inverse(const Pareto& f, double u) { return f.scale * std::exp(-std::log1p(-u) / f.shape); }
  static double inverse(const LogNormal& f, double u) {
    const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
    return std::exp(f.mu + f.sigma * z);
  }
  static double inverse(const Degenerate& f, double) { return f.point; }
  static double inverse(const Scaled& f, double u) { return f.factor * f.base->quantile(u); }
  static double inverse(const Shifted& f, double u) { return f.base->quantile(u) + f.offset; }

  Family family_;
};

inline std::string CdfModel::describe() const {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        auto n = [](double v) { return format_ext(v); };
        if constexpr (std::is_same_v<T, Exponential>) return "Exponential(" + n(f.rate) + ")";
        else if constexpr (std::is_same_v<T, Uniform>) return "Uniform(" + n(f.a) + "," + n(f.b) + ")";
        else if constexpr (std::is_same_v<T, Pareto>) return "Pareto(" + n(f.scale) + "," + n(f.shape) + ")";
        else if constexpr (std::is_same_v<T, LogNormal>) return "LogNormal(" + n(f.mu) + "," + n(f.sigma) + ")";
        else if constexpr (std::is_same_v<T, Degenerate>) return "Degenerate(" + n(f.point) + ")";
        else if constexpr (std::is_same_v<T, Scaled>) return n(f.factor) + "*" + f.base->describe();
        else return f.base->describe() + "+" + n(f.offset);
      },
      family_);
}

}  // namespace dal
