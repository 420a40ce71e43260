#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "dal/experiment.hpp"
#include "dal/report_io.hpp"

namespace dal {
namespace {

json canon_json(std::size_t K = 10000, std::size_t N = 8) {
  auto j = json::parse(R"({
    "exponent": {"rule": "scaled_iid", "scale": "k", "base": {"family": "uniform", "a": 0, "b": 2}},
    "coefficient": {"mode": "deterministic", "neg_log": "k"},
    "master_seed": 20261019,
    "rho_grid": [0.25, 0.5, 0.75, 1.0], "eps_policy": "grid",
    "criteria": [{"id": "thm4i", "rho": 0.5}, {"id": "thm3i", "rho": 2}]
  })");
  j["K"] = K;
  j["trials"] = N;
  return j;
}

json det_json(const char* lambda, const char* neg_log, std::size_t K) {
  json j;
  j["exponent"] = {{"rule", "deterministic"}, {"sequence", lambda}};
  j["coefficient"] = {{"mode", "deterministic"}, {"neg_log", neg_log}};
  j["K"] = K;
  j["trials"] = 1;
  return j;
}

TEST(Config, DefaultsAndRoundTrip) {
  const auto c = config_from_json(canon_json());
  EXPECT_EQ(c.K, 10000u);
  EXPECT_EQ(c.trials, 8u);
  EXPECT_DOUBLE_EQ(c.bisection.tol, 0.01);
  EXPECT_EQ(c.bisection.policy, InconclusivePolicy::Midpoint);
  EXPECT_DOUBLE_EQ(c.reconcile.consistent, 0.95);
  const auto j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)).dump(), j.dump());
}

TEST(Config, Rejections) {
  auto bad = [](auto patch) {
    auto j = canon_json();
    patch(j);
    return j;
  };
  EXPECT_THROW(config_from_json(bad([](json& j) { j["bogus"] = 1; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["K"] = 8; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["trials"] = 0; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["K"] = -5; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["rho_grid"] = {0.5, 0.25}; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["eps_policy"] = "quarter"; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["exponent"]["base"]["family"] = "cauchy"; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["exponent"]["base"]["b"] = -1; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["exponent"]["extra"] = 0; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["coefficient"]["neg_log"] = "k+"; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["criteria"] = {{{"id", "thm9"}}}; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["criteria"] = {{{"id", "cor2"}}}; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["bisection"] = {{"tol", 0}}; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["bisection"] = {{"policy", "sideways"}}; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["reconcile"] = {{"tension", 1.5}}; })), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/dir/missing.json"), ConfigError);
}

TEST(Experiment, DeterministicChainTrial) {
  const auto c = config_from_json(det_json("k", "k", 10000));
  const auto t = run_trial(c, 0);
  EXPECT_TRUE(t.errors.empty());
  EXPECT_NEAR(t.sigma_abs, 1.0, 0.02);
  EXPECT_NEAR(t.sigma_conv, 1.0, 0.02);
  EXPECT_NEAR(t.alpha0, 1.0, 0.02);
  EXPECT_GE(t.tau, 0.0);
  EXPECT_LE(t.tau, 0.01);
  EXPECT_EQ(t.trend_alpha0, "stable");
}

TEST(Experiment, TightChainTrial) {
  const auto c = config_from_json(det_json("ln(k+2)", "2*ln(k+2)", 100000));
  const auto t = run_trial(c, 0);
  EXPECT_NEAR(t.sigma_abs, 1.0, 0.05);
  EXPECT_NEAR(t.alpha0, 2.0, 0.05);
  EXPECT_NEAR(t.tau, 1.0, 0.02);
  EXPECT_NEAR(t.h, 0.5, 0.02);
  EXPECT_LE((1.0 - t.h) * t.alpha0, t.sigma_abs + 0.05);
}

// alpha0 - tau <= sigma_abs <= alpha0 on each trial, within 3 tol
TEST(Experiment, ChainPerTrial) {
  const auto c = config_from_json(canon_json(10000, 6));
  const double slack = 3 * c.bisection.tol;
  for (const auto& t : run_trials(c, {0, 1, 2, 3, 4, 5}, 2)) {
    ASSERT_TRUE(t.errors.empty()) << t.errors.front();
    EXPECT_LE(t.sigma_abs, t.alpha0 + slack) << t.trial;
    EXPECT_GE(t.sigma_abs, t.alpha0 - t.tau - slack) << t.trial;
    EXPECT_LE(t.sigma_conv, t.sigma_abs + slack);
  }
}

TEST(Experiment, CanonicalFamilyNearHalf) {
  const auto c = config_from_json(canon_json(100000, 8));
  const auto rep = run_experiment(c, 4);
  EXPECT_GE(rep.agg_sigma_abs.median, 0.48);
  EXPECT_LE(rep.agg_sigma_abs.median, 0.60);
}

TEST(Experiment, SeedDeterminism) {
  const auto c = config_from_json(canon_json(4000, 6));
  EXPECT_EQ(dump_report(run_experiment(c, 1)), dump_report(run_experiment(c, 3)));
  auto j = canon_json(4000, 6);
  j["master_seed"] = 7;
  EXPECT_NE(dump_report(run_experiment(config_from_json(j), 2)), dump_report(run_experiment(c, 2)));
}

TEST(Experiment, MergeInvariance) {
  const auto c = config_from_json(canon_json(4000, 7));
  const auto whole = dump_report(run_experiment(c, 2));
  auto a = run_trials(c, {6, 0, 3}, 1);
  auto b = run_trials(c, {5, 1, 4, 2}, 3);
  std::vector<TrialRecord> merged(b.begin(), b.end());
  merged.insert(merged.end(), a.begin(), a.end());
  EXPECT_EQ(dump_report(build_report(c, merged)), whole);
  std::reverse(merged.begin(), merged.end());
  EXPECT_EQ(dump_report(build_report(c, merged)), whole);
}

TEST(Experiment, CanonicalReconciliation) {
  const auto c = config_from_json(canon_json(20000, 8));
  const auto rep = run_experiment(c, 4);
  ASSERT_EQ(rep.criteria.size(), 2u);
  EXPECT_EQ(rep.criteria[0].verdict.cls, SeriesClass::Convergent);
  EXPECT_EQ(rep.criteria[0].implied_bound, ImpliedBound::SigmaGeRho);
  EXPECT_EQ(rep.reconciliation[0].status, Reconciliation::Consistent);
  EXPECT_EQ(rep.criteria[1].verdict.cls, SeriesClass::Divergent);
  EXPECT_EQ(rep.criteria[1].implied_bound, ImpliedBound::NecessaryFails);
  EXPECT_EQ(rep.reconciliation[1].status, Reconciliation::Consistent);
  EXPECT_FALSE(rep.any_tension());
}

TEST(Experiment, GridRhoOutsideDomainSkipped) {
  auto j = canon_json(4000, 1);
  j["rho_grid"] = {-1.0, 0.0, 0.5};
  j["criteria"] = {{{"id", "thm4i"}}, {{"id", "thm4ii"}}};
  const auto c = config_from_json(j);
  const auto rep = run_experiment(c, 1);
  // thm4i takes rho in (0,inf), thm4ii takes (-inf,0]
  ASSERT_EQ(rep.criteria.size(), 3u);
  EXPECT_EQ(rep.criteria[0].rho, 0.5);
  EXPECT_EQ(rep.criteria[1].rho, -1.0);
  EXPECT_EQ(rep.criteria[2].rho, 0.0);

  j["criteria"] = {{{"id", "thm4i"}, {"rho", -1.0}}};
  EXPECT_THROW(run_experiment(config_from_json(j), 1), ConfigError);
}

TEST(Experiment, WrongCoefficientModeRejected) {
  auto j = canon_json(4000, 1);
  j["criteria"] = {{{"id", "thm1b"}, {"delta", "0.9"}}};
  EXPECT_THROW(run_experiment(config_from_json(j), 1), ConfigError);
}

TEST(Experiment, RandomCoefficientThm1b) {
  json j;
  j["exponent"] = {{"rule", "deterministic"}, {"sequence", "k"}};
  j["coefficient"] = {{"mode", "random_modulus"}, {"law", {{"family", "uniform"}, {"a", 0}, {"b", 1}}}};
  j["K"] = 10000;
  j["trials"] = 3;
  j["criteria"] = {{{"id", "thm1b"}, {"delta", "0.9"}}};
  const auto rep = run_experiment(config_from_json(j), 2);
  ASSERT_EQ(rep.criteria.size(), 1u);
  const auto& r = rep.criteria[0];
  EXPECT_EQ(r.verdict.cls, SeriesClass::Divergent);
  EXPECT_EQ(r.implied_bound, ImpliedBound::SigmaLeRho);
  EXPECT_NEAR(r.rho, -std::log(0.9), 1e-12);
  const double K = 10000;
  // sum over k = 0..K-1 of (1 - 0.9^k)
  EXPECT_NEAR(r.partial_sum_at_K(), K - (1 - std::pow(0.9, K)) / 0.1, 1e-6);
}

TEST(Experiment, Cor1FastIsTension) {
  json j;
  j["exponent"] = {{"rule", "constant"}, {"base", {{"family", "exponential"}, {"rate", 1}}}};
  j["coefficient"] = {{"mode", "deterministic"}, {"neg_log", "k"}};
  j["K"] = 100000;
  j["trials"] = 3;
  j["criteria"] = {{{"id", "cor1"}}};
  const auto rep = run_experiment(config_from_json(j), 2);
  ASSERT_EQ(rep.criteria.size(), 1u);
  EXPECT_EQ(rep.criteria[0].implied_bound, ImpliedBound::SigmaEqRho);
  EXPECT_TRUE(rep.any_tension());
  for (const auto& t : rep.trials) EXPECT_EQ(t.alpha0, kPosInf);
}

TEST(Reconcile, BoundSatisfaction) {
  const double sl = 0.03;
  EXPECT_EQ(bound_satisfied(CriterionId::Thm4i, ImpliedBound::SigmaGeRho, 0.5, 0.48, sl), true);
  EXPECT_EQ(bound_satisfied(CriterionId::Thm4i, ImpliedBound::SigmaGeRho, 0.5, 0.4, sl), false);
  EXPECT_EQ(bound_satisfied(CriterionId::Thm4i, ImpliedBound::SigmaGeRho, 0.5, kPosInf, sl), true);
  EXPECT_EQ(bound_satisfied(CriterionId::Thm1b, ImpliedBound::SigmaLeRho, 0.1, kNegInf, sl), true);
  EXPECT_EQ(bound_satisfied(CriterionId::Thm1b, ImpliedBound::SigmaLeRho, 0.1, 0.2, sl), false);
  EXPECT_EQ(bound_satisfied(CriterionId::Cor1, ImpliedBound::SigmaEqRho, 0.0, kPosInf, sl), false);
  EXPECT_EQ(bound_satisfied(CriterionId::Cor1, ImpliedBound::SigmaEqRho, 0.0, 0.01, sl), true);
  EXPECT_EQ(bound_satisfied(CriterionId::Thm3i, ImpliedBound::NecessaryFails, 0.75, 0.52, sl), true);
  EXPECT_EQ(bound_satisfied(CriterionId::Thm3i, ImpliedBound::NecessaryFails, 0.75, 0.9, sl), false);
  EXPECT_EQ(bound_satisfied(CriterionId::Thm2b, ImpliedBound::NecessaryFails, kNegInf, kNegInf, sl), false);
  EXPECT_EQ(bound_satisfied(CriterionId::Thm2b, ImpliedBound::NecessaryFails, kNegInf, -3.0, sl), true);
  EXPECT_FALSE(bound_satisfied(CriterionId::Thm3i, ImpliedBound::NecessaryHolds, 0.5, 0.5, sl).has_value());
  EXPECT_FALSE(bound_satisfied(CriterionId::Thm4i, ImpliedBound::NotApplicable, 0.5, 0.5, sl).has_value());
}

TEST(Sweep, CanonicalBrackets) {
  auto j = canon_json(20000, 4);
  j["criteria"] = {{{"id", "thm4i"}}, {{"id", "thm3i"}}};
  const auto [rep, table] = sweep(config_from_json(j), {0.25, 0.5, 0.75, 1.0}, 2);
  EXPECT_EQ(table.rows.size(), 8u);
  ASSERT_TRUE(table.established.has_value());
  ASSERT_TRUE(table.refuted.has_value());
  EXPECT_DOUBLE_EQ(*table.established, 0.5);
  EXPECT_DOUBLE_EQ(*table.refuted, 0.75);
}

TEST(Sweep, EmptyCriteria) {
  auto j = canon_json(2000, 1);
  j.erase("criteria");
  const auto [rep, table] = sweep(config_from_json(j), {0.5}, 1);
  EXPECT_TRUE(table.rows.empty());
  EXPECT_FALSE(table.established.has_value());
  EXPECT_FALSE(table.refuted.has_value());
}

TEST(Threads, EnvironmentCap) {
  ::setenv("DAL_THREADS", "1", 1);
  EXPECT_EQ(default_threads(), 1u);
  ::setenv("DAL_THREADS", "junk", 1);
  EXPECT_GE(default_threads(), 1u);
  ::unsetenv("DAL_THREADS");
}

}  // namespace
}  // namespace dal
