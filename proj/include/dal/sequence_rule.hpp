#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dal/ext_real.hpp"

namespace dal {

/// Deterministic index sequence k -> s(k) in product form
///
///     s(k) = c * prod_i base_i(k)^p_i,
///
/// where each base is (k + a), ln(k + a) or ln(ln(k + a)). The classic
/// c * k^p * (ln(k + e))^q family is the special case with two factors.
///
/// Text form accepted by parse(): products and quotients of numbers, `e`,
/// `k`, `(k+a)`, `ln(k+a)`, `ln(ln(k+a))`, each optionally raised to a
/// numeric power, e.g. "k", "2*ln(k+2)", "(k+1)/10", "k^0.5",
/// "ln(ln(k+3))", "1/(k+1)".
class SequenceRule {
 public:
  enum class Base { Poly, Log, LogLog };

  struct Factor {
    Base base;
    double shift;
    double power;
  };

  SequenceRule() = default;
  explicit SequenceRule(double c, std::vector<Factor> factors = {})
      : coeff_(c), factors_(std::move(factors)) {
    if (!std::isfinite(coeff_)) throw std::invalid_argument("sequence coefficient must be finite");
  }

  /// c * k^p * (ln(k + e))^q
  static SequenceRule power_log(double c, double p, double q) {
    std::vector<Factor> f;
    if (p != 0.0) f.push_back({Base::Poly, 0.0, p});
    if (q != 0.0) f.push_back({Base::Log, std::numbers::e, q});
    return SequenceRule(c, std::move(f));
  }

  static SequenceRule constant(double c) { return SequenceRule(c); }

  static SequenceRule parse(std::string_view text);

  double coefficient() const { return coeff_; }
  const std::vector<Factor>& factors() const { return factors_; }

  /// May return a non-finite value (e.g. ln(k) at k = 0); callers that need
  /// finite values check.
  double operator()(std::size_t k) const {
    double v = coeff_;
    if (v == 0.0) return 0.0;
    const double kk = static_cast<double>(k);
    for (const auto& f : factors_) {
      double b = kk + f.shift;
      if (f.base == Base::Log) b = std::log(b);
      if (f.base == Base::LogLog) b = std::log(std::log(b));
      v *= f.power == 1.0 ? b : std::pow(b, f.power);
    }
    return v;
  }

  /// Sign of the limit behaviour as k -> inf: +1 if s(k) -> +inf, -1 if
  /// s(k) -> -inf, 0 if s(k) stays bounded. Exact for the grammar because
  /// growth orders compare lexicographically (poly, log, log-log).
  int diverges() const {
    if (coeff_ == 0.0) return 0;
    double orders[3] = {0.0, 0.0, 0.0};
    for (const auto& f : factors_) orders[static_cast<int>(f.base)] += f.power;
    for (double o : orders) {
      if (o > 0.0) return coeff_ > 0.0 ? 1 : -1;
      if (o < 0.0) return 0;
    }
    return 0;
  }

  /// True iff s(k) -> 0.
  bool vanishes() const {
    if (coeff_ == 0.0) return true;
    double orders[3] = {0.0, 0.0, 0.0};
    for (const auto& f : factors_) orders[static_cast<int>(f.base)] += f.power;
    for (double o : orders) {
      if (o > 0.0) return false;
      if (o < 0.0) return true;
    }
    return false;
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << coeff_;
    for (const auto& f : factors_) {
      os << '*';
      switch (f.base) {
        case Base::Poly: os << "(k+" << f.shift << ')'; break;
        case Base::Log: os << "ln(k+" << f.shift << ')'; break;
        case Base::LogLog: os << "ln(ln(k+" << f.shift << "))"; break;
      }
      if (f.power != 1.0) os << '^' << f.power;
    }
    return os.str();
  }

 private:
  double coeff_ = 0.0;
  std::vector<Factor> factors_;
};

namespace detail {

class RuleParser {
 public:
  explicit RuleParser(std::string_view s) : s_(s) {}

  SequenceRule parse() {
    double c = 1.0;
    std::vector<SequenceRule::Factor> factors;
    skip();
    if (peek() == '-') {
      ++pos_;
      c = -1.0;
    }
    term(c, factors, false);
    for (;;) {
      skip();
      if (pos_ >= s_.size()) break;
      const char op = s_[pos_];
      if (op != '*' && op != '/') fail("expected '*' or '/'");
      ++pos_;
      term(c, factors, op == '/');
    }
    return SequenceRule(c, std::move(factors));
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("sequence rule '" + std::string(s_) + "': " + what +
                                " at position " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  void expect(char ch) {
    if (peek() != ch) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }
  bool keyword(std::string_view kw) {
    skip();
    if (s_.substr(pos_, kw.size()) == kw) {
      pos_ += kw.size();
      return true;
    }
    return false;
  }

  double number() {
    skip();
    if (pos_ < s_.size() && s_[pos_] == 'e' &&
        (pos_ + 1 >= s_.size() || !std::isalpha(static_cast<unsigned char>(s_[pos_ + 1])))) {
      ++pos_;
      return std::numbers::e;
    }
    char* end = nullptr;
    std::string tmp(s_.substr(pos_));
    const double v = std::strtod(tmp.c_str(), &end);
    if (end == tmp.c_str()) fail("expected a number");
    pos_ += static_cast<std::size_t>(end - tmp.c_str());
    return v;
  }

  double signed_number() {
    double sign = 1.0;
    if (peek() == '-') {
      ++pos_;
      sign = -1.0;
    } else if (peek() == '+') {
      ++pos_;
    }
    if (peek() == '(') {
      ++pos_;
      const double v = signed_number();
      expect(')');
      return sign * v;
    }
    return sign * number();
  }

  // k or k+a or k-a (inside parentheses)
  double shifted_k() {
    if (!keyword("k")) fail("expected 'k'");
    const char ch = peek();
    if (ch == '+') {
      ++pos_;
      return number();
    }
    if (ch == '-') {
      ++pos_;
      return -number();
    }
    return 0.0;
  }

  void term(double& c, std::vector<SequenceRule::Factor>& out, bool divide) {
    const char ch = peek();
    bool is_factor = false;
    SequenceRule::Factor f{SequenceRule::Base::Poly, 0.0, 1.0};
    double value = 1.0;
    if (keyword("ln")) {
      expect('(');
      if (keyword("ln")) {
        expect('(');
        f = {SequenceRule::Base::LogLog, shifted_k(), 1.0};
        expect(')');
      } else {
        f = {SequenceRule::Base::Log, shifted_k(), 1.0};
      }
      expect(')');
      is_factor = true;
    } else if (ch == 'k') {
      f = {SequenceRule::Base::Poly, shifted_k(), 1.0};
      if (f.shift != 0.0) fail("write shifted index as (k+a)");
      is_factor = true;
    } else if (ch == '(') {
      ++pos_;
      if (peek() == 'k') {
        f = {SequenceRule::Base::Poly, shifted_k(), 1.0};
        is_factor = true;
      } else {
        value = signed_number();
      }
      expect(')');
    } else {
      value = number();
    }
    double power = 1.0;
    if (peek() == '^') {
      ++pos_;
      power = signed_number();
    }
    if (divide) power = -power;
    if (is_factor) {
      f.power = power;
      if (power != 0.0) out.push_back(f);
    } else {
      c *= std::pow(value, power);
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline SequenceRule SequenceRule::parse(std::string_view text) {
  return detail::RuleParser(text).parse();
}

}  // namespace dal
