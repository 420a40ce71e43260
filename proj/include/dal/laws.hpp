#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dal/cdf_model.hpp"
#include "dal/rng.hpp"
#include "dal/sequence_rule.hpp"

namespace dal {

enum class Dependence { MutuallyIndependent, PairwiseConstruction };

/// Index-dependent law of the random exponents lambda_k.
///
/// Three rules are supported:
///   - Constant:      lambda_k ~ base for every k
///   - Deterministic: lambda_k = s(k) almost surely (Degenerate(s(k)))
///   - ScaledIid:     lambda_k = s(k) * X_k with X_k ~ base
///
/// Every law must have support in [0, +inf).
class ExponentLaw {
 public:
  enum class Rule { Constant, Deterministic, ScaledIid };

  static ExponentLaw constant(CdfModel base, Dependence dep = Dependence::MutuallyIndependent) {
    return ExponentLaw(Rule::Constant, std::move(base), SequenceRule::constant(1.0), dep);
  }
  static ExponentLaw deterministic(SequenceRule s) {
    return ExponentLaw(Rule::Deterministic, std::nullopt, std::move(s), Dependence::MutuallyIndependent);
  }
  static ExponentLaw scaled_iid(SequenceRule scale, CdfModel base,
                                Dependence dep = Dependence::MutuallyIndependent) {
    return ExponentLaw(Rule::ScaledIid, std::move(base), std::move(scale), dep);
  }

  Rule rule() const { return rule_; }
  Dependence dependence() const { return dep_; }
  const std::optional<CdfModel>& base() const { return base_; }
  const SequenceRule& sequence() const { return seq_; }

  /// Scale (ScaledIid) or value (Deterministic) at index k; 1 for Constant.
  double scale_at(std::size_t k) const {
    if (rule_ == Rule::Constant) return 1.0;
    const double s = seq_(k);
    if (!std::isfinite(s) || s < 0.0)
      throw std::domain_error("exponent sequence is negative or non-finite at k=" + std::to_string(k));
    return s;
  }

  /// The law of lambda_k as a standalone model.
  CdfModel law_at(std::size_t k) const {
    switch (rule_) {
      case Rule::Constant: return *base_;
      case Rule::Deterministic: return CdfModel::degenerate(scale_at(k));
      case Rule::ScaledIid: {
        const double s = scale_at(k);
        return s == 0.0 ? CdfModel::degenerate(0.0) : CdfModel::scaled(*base_, s);
      }
    }
    throw std::logic_error("unreachable");
  }

  /// F_k(x) = P{lambda_k < x}, without materialising law_at(k).
  double cdf_at(std::size_t k, double x) const {
    switch (rule_) {
      case Rule::Constant: return base_->cdf(x);
      case Rule::Deterministic: return x > scale_at(k) ? 1.0 : 0.0;
      case Rule::ScaledIid: {
        const double s = scale_at(k);
        return s == 0.0 ? (x > 0.0 ? 1.0 : 0.0) : base_->cdf(x / s);
      }
    }
    throw std::logic_error("unreachable");
  }

  double quantile_at(std::size_t k, double u) const {
    switch (rule_) {
      case Rule::Constant: return base_->quantile(u);
      case Rule::Deterministic: return scale_at(k);
      case Rule::ScaledIid: {
        const double s = scale_at(k);
        return s == 0.0 ? 0.0 : s * base_->quantile(u);
      }
    }
    throw std::logic_error("unreachable");
  }

  bool is_deterministic() const { return rule_ == Rule::Deterministic; }

 private:
  ExponentLaw(Rule r, std::optional<CdfModel> base, SequenceRule s, Dependence dep)
      : rule_(r), base_(std::move(base)), seq_(std::move(s)), dep_(dep) {
    if (base_ && base_->support_lower() < 0.0)
      throw std::invalid_argument("exponent law must have nonnegative support");
    if (dep_ == Dependence::PairwiseConstruction) {
      if (!base_ || !base_->is_uniform_based())
        throw std::invalid_argument("pairwise construction is only available for uniform base laws");
    }
  }

  Rule rule_;
  std::optional<CdfModel> base_;
  SequenceRule seq_;
  Dependence dep_;
};

/// Coefficients f_k, either deterministic (given through mu_k = -ln|f_k|) or
/// with random moduli |f_k| = a_k * Z_k, Z_k ~ law, a_k = exp(-scale_neg_log(k)).
class CoefficientLaw {
 public:
  enum class Mode { Deterministic, RandomModulus };

  static CoefficientLaw deterministic(SequenceRule neg_log) {
    CoefficientLaw c;
    c.mode_ = Mode::Deterministic;
    c.neg_log_ = std::move(neg_log);
    return c;
  }
  static CoefficientLaw random_modulus(CdfModel law, std::optional<SequenceRule> scale_neg_log = std::nullopt) {
    if (law.support_lower() < 0.0) throw std::invalid_argument("coefficient modulus law must have nonnegative support");
    CoefficientLaw c;
    c.mode_ = Mode::RandomModulus;
    c.law_ = std::move(law);
    c.scale_neg_log_ = std::move(scale_neg_log);
    return c;
  }

  Mode mode() const { return mode_; }
  bool is_deterministic() const { return mode_ == Mode::Deterministic; }
  const SequenceRule& neg_log_rule() const { return neg_log_; }
  const std::optional<CdfModel>& modulus_law() const { return law_; }
  const std::optional<SequenceRule>& scale_neg_log() const { return scale_neg_log_; }

  /// mu_k = -ln|f_k| in deterministic mode.
  double neg_log(std::size_t k) const {
    if (mode_ != Mode::Deterministic) throw std::logic_error("neg_log: coefficients are random");
    const double v = neg_log_(k);
    if (!std::isfinite(v)) throw std::domain_error("-ln|f_k| is not finite at k=" + std::to_string(k));
    return v;
  }

  /// a_k (1 when no deterministic scale is configured).
  double modulus_scale(std::size_t k) const {
    if (!scale_neg_log_) return 1.0;
    return std::exp(-(*scale_neg_log_)(k));
  }

  /// F_k(x) = P{|f_k| < x} in random-modulus mode.
  double modulus_cdf(std::size_t k, double x) const {
    if (mode_ != Mode::RandomModulus) throw std::logic_error("modulus_cdf: coefficients are deterministic");
    return law_->cdf(x / modulus_scale(k));
  }

  /// True iff f_k -> 0 (deterministic mode; exact for the sequence grammar).
  bool tends_to_zero() const { return is_deterministic() && neg_log_.diverges() > 0; }

 private:
  CoefficientLaw() = default;

  Mode mode_ = Mode::Deterministic;
  SequenceRule neg_log_;
  std::optional<CdfModel> law_;
  std::optional<SequenceRule> scale_neg_log_;
};

/// One realised trial.
struct TrialDraw {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
  std::size_t K = 0;
  std::vector<double> lambdas;
  std::optional<std::vector<double>> coeff_moduli;

  bool operator==(const TrialDraw&) const = default;
};

/// Draws lambda_0..lambda_{K-1} (and |f_k| in random mode) by inverse
/// transform of keyed uniforms. Pure in (laws, seed, trial_index, K).
inline TrialDraw sample_trial(const ExponentLaw& exp_law, const CoefficientLaw& coeff_law,
                              std::uint64_t master_seed, std::uint64_t trial_index, std::size_t K) {
  if (K < 1) throw std::invalid_argument("sample_trial: K must be >= 1");
  TrialDraw d;
  d.master_seed = master_seed;
  d.trial_index = trial_index;
  d.K = K;
  d.lambdas.resize(K);
  if (exp_law.dependence() == Dependence::PairwiseConstruction) {
    const PairwiseUniforms uniforms(master_seed, trial_index);
    for (std::size_t k = 0; k < K; ++k) d.lambdas[k] = exp_law.quantile_at(k, uniforms(k));
  } else {
    for (std::size_t k = 0; k < K; ++k)
      d.lambdas[k] = exp_law.quantile_at(k, keyed_uniform(master_seed, trial_index, Stream::Exponent, k));
  }
  if (!coeff_law.is_deterministic()) {
    std::vector<double> moduli(K);
    const CdfModel& law = *coeff_law.modulus_law();
    for (std::size_t k = 0; k < K; ++k)
      moduli[k] = coeff_law.modulus_scale(k) *
                  law.quantile(keyed_uniform(master_seed, trial_index, Stream::Coefficient, k));
    d.coeff_moduli = std::move(moduli);
  }
  return d;
}

/// mu_k = -ln|f_k| for the realised trial (deterministic or drawn moduli).
inline std::vector<double> neg_log_coefficients(const CoefficientLaw& coeff, const TrialDraw& draw) {
  std::vector<double> mu(draw.K);
  if (coeff.is_deterministic()) {
    for (std::size_t k = 0; k < draw.K; ++k) mu[k] = coeff.neg_log(k);
  } else {
    if (!draw.coeff_moduli) throw std::invalid_argument("trial has no coefficient draws");
    for (std::size_t k = 0; k < draw.K; ++k) mu[k] = -std::log((*draw.coeff_moduli)[k]);
  }
  return mu;
}

}  // namespace dal
