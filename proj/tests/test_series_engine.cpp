#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dal/series_engine.hpp"
#include "dal/tail_limits.hpp"

namespace dal {
namespace {

std::vector<double> seq(const char* rule, std::size_t K) {
  const auto s = SequenceRule::parse(rule);
  std::vector<double> v(K);
  for (std::size_t k = 0; k < K; ++k) v[k] = s(k);
  return v;
}

std::vector<double> terms_of(std::size_t K, double (*f)(double)) {
  std::vector<double> t(K);
  for (std::size_t k = 0; k < K; ++k) t[k] = f(static_cast<double>(k));
  return t;
}

TEST(Classify, Geometric) {
  const auto v = classify(terms_of(100000, [](double k) { return std::pow(2.0, -k); }));
  EXPECT_EQ(v.cls, SeriesClass::Convergent);
  EXPECT_NEAR(v.final_sum(), 2.0, 1e-12);
}

TEST(Classify, HarmonicIsDivergent) {
  const auto v = classify(terms_of(100000, [](double k) { return 1.0 / (k + 1.0); }));
  EXPECT_EQ(v.cls, SeriesClass::Divergent);
  EXPECT_EQ(v.rule, SeriesRule::SlopeDivergent);
  EXPECT_LE(v.tail_slope, 1.0);
}

TEST(Classify, LogSquaredComparisonSeries) {
  // Integral test: sum 1/((k+2) ln^2(k+2)) converges. Its local log-log
  // slope is 1 + 2/ln k, about 1.17 at k ~ 1e5, which clears the margin.
  const auto v = classify(terms_of(100000, [](double k) { return 1.0 / ((k + 2) * std::pow(std::log(k + 2), 2)); }));
  EXPECT_EQ(v.cls, SeriesClass::Convergent);
  EXPECT_NEAR(v.tail_slope, 1.0 + 2.0 / std::log(75000.0), 0.01);
}

TEST(Classify, SlowLogFactorIsInconclusive) {
  // 1/((k+2) ln^0.3(k+2)) diverges, but its slope 1 + 0.3/ln k sits inside
  // the margin band: the classifier must not claim either way.
  const auto v = classify(terms_of(100000, [](double k) { return 1.0 / ((k + 2) * std::pow(std::log(k + 2), 0.3)); }));
  EXPECT_EQ(v.cls, SeriesClass::Inconclusive);
  EXPECT_EQ(v.rule, SeriesRule::NoRuleFired);
}

TEST(Classify, RuleInvariants) {
  EXPECT_EQ(classify(std::vector<double>(1000, 1.0)).rule, SeriesRule::NonVanishing);
  std::vector<double> zeros(1000, 0.0);
  zeros[3] = 5.0;
  EXPECT_EQ(classify(zeros).rule, SeriesRule::EventuallyZero);
  const auto capped = classify(std::vector<double>(100, 1e11));
  EXPECT_EQ(capped.cls, SeriesClass::Divergent);
  EXPECT_EQ(capped.rule, SeriesRule::SumCap);
  const auto pw = classify(terms_of(100000, [](double k) { return std::pow(k + 1.0, -1.5); }));
  EXPECT_EQ(pw.rule, SeriesRule::SlopeConvergent);
  EXPECT_GE(pw.tail_slope, 1.05);
}

TEST(Classify, NegativeTermIsDomainError) {
  std::vector<double> t(100, 1.0);
  t[50] = -1e-9;
  EXPECT_THROW(classify(t), std::domain_error);
}

TEST(Classify, PartialSumCheckpoints) {
  const auto v = classify(std::vector<double>(1600, 0.0));
  ASSERT_EQ(v.partial_sums.size(), 5u);
  EXPECT_EQ(v.partial_sums.front().first, 100u);
  EXPECT_EQ(v.partial_sums.back().first, 1600u);
}

TEST(ClassifySigned, AlternatingSeries) {
  const auto geo = classify_signed(terms_of(2000, [](double k) { return std::pow(-0.5, k); }));
  EXPECT_EQ(geo.cls, SeriesClass::Convergent);
  EXPECT_NEAR(geo.final_sum(), 2.0 / 3.0, 1e-12);
  const auto osc = classify_signed(terms_of(2000, [](double k) { return std::fmod(k, 2.0) == 0 ? 1.0 : -1.0; }));
  EXPECT_EQ(osc.cls, SeriesClass::Divergent);
  // conditionally convergent: sign-aware Cauchy test cannot certify at 1e-8
  const auto leibniz =
      classify_signed(terms_of(2000, [](double k) { return (std::fmod(k, 2.0) == 0 ? 1.0 : -1.0) / (k + 1); }));
  EXPECT_EQ(leibniz.cls, SeriesClass::Inconclusive);
  // nonnegative input delegates
  const auto pos = classify_signed(terms_of(2000, [](double k) { return std::pow(0.5, k); }));
  EXPECT_EQ(pos.rule, classify(terms_of(2000, [](double k) { return std::pow(0.5, k); })).rule);
}

TEST(SigmaAbs, ReferenceValues) {
  const std::size_t K = 10000;
  BisectionOptions opt;
  opt.tol = 0.02;
  EXPECT_NEAR(sigma_abs(seq("k", K), seq("k", K), opt).value, 1.0, 0.02);
  EXPECT_NEAR(sigma_abs(seq("0", K), seq("k", K), opt).value, 0.0, 0.02);
  EXPECT_EQ(sigma_abs(seq("k^2", K), seq("k", K), opt).value, kPosInf);
}

TEST(SigmaAbs, BracketInvariant) {
  const std::size_t K = 10000;
  BisectionOptions opt;
  opt.policy = InconclusivePolicy::ConservativeDown;
  const auto e = sigma_abs(seq("k", K), seq("k", K), opt);
  EXPECT_EQ(e.verdict_lo, SeriesClass::Convergent);
  EXPECT_NE(e.verdict_hi, SeriesClass::Convergent);
  EXPECT_LE(e.x_hi - e.x_lo, opt.tol);
  EXPECT_GE(e.value, e.x_lo);
  EXPECT_LE(e.value, e.x_hi);
}

TEST(SigmaAbs, NegativeSentinelWhenDivergentEverywhere) {
  // f_k = e^{k}: diverges at every x in range
  EXPECT_EQ(sigma_abs(seq("-k", 1000), seq("ln(k+2)", 1000)).value, kNegInf);
}

TEST(SigmaConv, PowerSeriesInLogExponents) {
  // sum (k+2)^{x-2} converges iff x < 1
  const std::size_t K = 100000;
  const auto mu = seq("2*ln(k+2)", K), lam = seq("ln(k+2)", K);
  const auto e = sigma_conv(mu, lam);
  EXPECT_NEAR(e.value, 1.0, 0.05);
  ASSERT_TRUE(e.inconclusive_band.has_value());
  EXPECT_NEAR(e.inconclusive_band->first, 0.95, 0.02);
  EXPECT_NEAR(e.inconclusive_band->second, 1.0, 0.02);
}

TEST(SigmaConv, CoincidesWithSigmaAbsForPositiveCoefficients) {
  const std::size_t K = 10000;
  const auto mu = seq("k", K), lam = seq("k", K);
  const auto a = sigma_abs(mu, lam), c = sigma_conv(mu, lam);
  EXPECT_EQ(a.value, c.value);
  EXPECT_NEAR(c.value, 1.0, 0.02);
  std::vector<double> signs(K, 1.0);
  EXPECT_EQ(sigma_conv(mu, lam, signs).value, a.value);
}

TEST(SigmaConv, AlternatingSignsAreClassifiedSignAware) {
  // f_k = (-1)^k e^{-k}: absolutely convergent below 1, terms blow up above
  const std::size_t K = 4000;
  std::vector<double> signs(K);
  for (std::size_t k = 0; k < K; ++k) signs[k] = k % 2 ? -1.0 : 1.0;
  const auto e = sigma_conv(seq("k", K), seq("k", K), signs);
  EXPECT_NEAR(e.value, 1.0, 0.02);
}

TEST(ZadCondition, ReferenceValues) {
  const std::size_t K = 10000;
  const auto mu = seq("k", K), lam = seq("k", K);
  EXPECT_EQ(zad_condition(mu, lam, 2.0, 0.0).cls, SeriesClass::Divergent);
  EXPECT_EQ(zad_condition(mu, lam, 2.0, 2.0).cls, SeriesClass::Convergent);
  EXPECT_EQ(zad_condition(mu, lam, 0.5, 0.0).cls, SeriesClass::Convergent);
}

TEST(Prop1LowerBound, ReferenceValues) {
  const std::size_t K = 10000;
  const auto mu = seq("k", K), lam = seq("k", K);
  const auto zad = zad_condition(mu, lam, 2.0, 2.0);
  const auto bound = prop1_lower_bound(1.0, 2.0, 2.0, zad);
  ASSERT_TRUE(bound.has_value());
  EXPECT_EQ(*bound, 0.0);
  // consistent with the directly estimated abscissa
  EXPECT_LE(*bound, sigma_abs(mu, lam).value);
  EXPECT_FALSE(prop1_lower_bound(1.0, 2.0, 0.0, zad_condition(mu, lam, 2.0, 0.0)).has_value());
  EXPECT_EQ(*prop1_lower_bound(kPosInf, 1.0, 0.0, zad), kPosInf);
  EXPECT_THROW(prop1_lower_bound(1.0, 0.0, 0.0, zad), std::domain_error);
}

TEST(ChainInequalities, TightInstance) {
  // f_k = (k+2)^-2, lambda_k = ln(k+2): sigma_a = sigma_conv = 1, alpha0 = 2,
  // tau = 1, h = 1/2.
  const std::size_t K = 100000;
  const double tol = 0.05;
  const auto mu = seq("2*ln(k+2)", K), lam = seq("ln(k+2)", K);
  const double sa = sigma_abs(mu, lam).value;
  const double sc = sigma_conv(mu, lam).value;
  const double a0 = alpha0(mu, lam).value;
  const double t = tau(lam).value;
  const double h = h_coeff(mu).value;
  EXPECT_LE(sa, sc + tol);
  EXPECT_LE(sc, a0 + tol);
  EXPECT_LE(a0, sa + t + 2 * tol);
  EXPECT_NEAR(a0, sa + t, 2 * tol);  // both sides active
  EXPECT_LE((1 - h) * a0, sa + tol);
  EXPECT_NEAR((1 - h) * a0, sa, tol);
}

TEST(ChainInequalities, EqualityUnderCoefficientCondition) {
  const std::size_t K = 10000;
  for (const char* lam_rule : {"k", "2*k", "k/2", "k*ln(k+e)"}) {
    const auto mu = seq("k", K), lam = seq(lam_rule, K);
    ASSERT_TRUE(coef_condition(mu).holds);
    const double tol = 0.01;
    const double sa = sigma_abs(mu, lam).value, a0 = alpha0(mu, lam).value;
    if (is_sentinel(a0)) {
      EXPECT_EQ(sa, a0) << lam_rule;
    } else {
      EXPECT_NEAR(sa, a0, 2 * tol) << lam_rule;
    }
  }
}

TEST(Monotonicity, LargerExponentsOnlyHurtConvergenceAtPositiveX) {
  const std::size_t K = 20000;
  const auto mu = seq("k", K);
  const auto law = ExponentLaw::scaled_iid(SequenceRule::parse("k"), CdfModel::uniform(0.0, 2.0));
  const auto d = sample_trial(law, CoefficientLaw::deterministic(SequenceRule::parse("k")), 5, 0, K);
  std::vector<double> bigger = d.lambdas;
  for (std::size_t k = 0; k < K; ++k) bigger[k] += 0.1 * static_cast<double>(k);
  for (double x : {0.1, 0.3, 0.45, 0.5, 0.6, 0.9}) {
    const auto small_v = classify_log(dirichlet_log_terms(mu, d.lambdas, x)).cls;
    const auto big_v = classify_log(dirichlet_log_terms(mu, bigger, x)).cls;
    if (small_v == SeriesClass::Divergent) {
      EXPECT_EQ(big_v, SeriesClass::Divergent) << x;
    }
    if (big_v == SeriesClass::Convergent) {
      EXPECT_EQ(small_v, SeriesClass::Convergent) << x;
    }
  }
  EXPECT_GE(sigma_abs(mu, d.lambdas).value, sigma_abs(mu, bigger).value);
}

TEST(Bisection, DeterministicAndPolicyOrdered) {
  const std::size_t K = 100000;
  const auto mu = seq("2*ln(k+2)", K), lam = seq("ln(k+2)", K);
  BisectionOptions down, up, mid;
  down.policy = InconclusivePolicy::ConservativeDown;
  up.policy = InconclusivePolicy::ConservativeUp;
  const auto d1 = sigma_abs(mu, lam, down), d2 = sigma_abs(mu, lam, down);
  EXPECT_EQ(d1.value, d2.value);
  EXPECT_EQ(d1.iterations, d2.iterations);
  const double m = sigma_abs(mu, lam, mid).value;
  const double u = sigma_abs(mu, lam, up).value;
  EXPECT_LT(d1.value, m);
  EXPECT_LT(m, u);
  EXPECT_NEAR(d1.value, 0.95, 0.01);
  EXPECT_NEAR(u, 1.0, 0.01);
}

TEST(Bisection, RejectsBadOptions) {
  BisectionOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW(estimate_abscissa([](double) { return SeriesVerdict{}; }, bad), std::invalid_argument);
  bad.tol = 0.1;
  bad.x_lo = 1.0;
  bad.x_hi = 1.0;
  EXPECT_THROW(estimate_abscissa([](double) { return SeriesVerdict{}; }, bad), std::invalid_argument);
}

}  // namespace
}  // namespace dal
