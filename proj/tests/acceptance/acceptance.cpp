// Acceptance runner: one PASS/FAIL line per criterion, exit 1 if any fail.
//   acceptance [--only N]

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dal/experiment.hpp"
#include "dal/report_io.hpp"

namespace {

using namespace dal;
namespace fs = std::filesystem;

struct Checks {
  std::vector<std::string> failed;
  std::ostringstream info;

  void expect(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
  void in_range(double v, double lo, double hi, const std::string& name) {
    expect(v >= lo && v <= hi, name + "=" + format_ext(v) + " not in [" + format_ext(lo) + ", " + format_ext(hi) + "]");
  }
  template <class T>
  Checks& note(const T& x) {
    info << x;
    return *this;
  }
};

ExperimentConfig load_named(const char* file) { return load_config(fs::path(DAL_CONFIG_DIR) / file); }

std::string fx(double v) { return format_ext(v); }

// 1
void deterministic_chain(Checks& c) {
  const auto cfg = load_named("deterministic.json");
  const auto t = run_trial(cfg, 0);
  c.expect(t.errors.empty(), "trial errors");
  c.in_range(t.sigma_abs, 0.98, 1.02, "sigma_abs");
  c.in_range(t.sigma_conv, 0.98, 1.02, "sigma_conv");
  c.in_range(t.alpha0, 0.98, 1.02, "alpha0");
  c.in_range(t.tau, 0.0, 0.01, "tau");
  c.note("sigma_abs=").note(fx(t.sigma_abs)).note(" alpha0=").note(fx(t.alpha0)).note(" tau=").note(fx(t.tau));
}

// 2
void tight_chain(Checks& c) {
  const auto cfg = load_named("tight.json");
  const auto t = run_trial(cfg, 0);
  c.expect(t.errors.empty(), "trial errors");
  c.in_range(t.sigma_abs, 0.95, 1.05, "sigma_abs");
  c.in_range(t.alpha0, 1.95, 2.05, "alpha0");
  c.in_range(t.tau, 0.98, 1.02, "tau");
  c.in_range(t.h, 0.48, 0.52, "h");
  const double lhs = (1.0 - t.h) * t.alpha0;
  c.expect(lhs <= t.sigma_abs + 0.05, "(1-h)*alpha0=" + fx(lhs) + " > sigma_abs+0.05");
  c.note("sigma_abs=").note(fx(t.sigma_abs)).note(" alpha0=").note(fx(t.alpha0)).note(" tau=").note(fx(t.tau));
  c.note(" h=").note(fx(t.h)).note(" (1-h)alpha0=").note(fx(lhs));
}

// 3
void monte_carlo(Checks& c) {
  auto cfg = load_named("canon.json");
  cfg.criteria.clear();
  const auto rep = run_experiment(cfg);
  c.expect(rep.trials.size() == 50 && cfg.K == 100000, "expected N=50, K=1e5");
  const double med = rep.agg_sigma_abs.median;
  c.in_range(med, 0.50, 0.56, "median sigma_abs");
  const auto inside = std::count_if(rep.trials.begin(), rep.trials.end(),
                                    [](const TrialRecord& t) { return t.sigma_abs >= 0.48 && t.sigma_abs <= 0.60; });
  const double frac = static_cast<double>(inside) / static_cast<double>(rep.trials.size());
  c.expect(frac >= 0.9, "fraction in [0.48,0.60] = " + fx(frac));
  c.note("median=").note(fx(med)).note(" in-band=").note(fx(frac));
}

// 4
void bracketing(Checks& c) {
  auto cfg = load_named("canon.json");
  cfg.trials = 10;
  cfg.criteria.clear();
  CriterionSpec t4, t3;
  t4.id = CriterionId::Thm4i;
  t4.rho = 0.5;
  t3.id = CriterionId::Thm3i;
  t3.rho = 0.75;
  t3.eps = 0.25;
  cfg.criteria = {t4, t3};
  const auto rep = run_experiment(cfg);
  const auto& a = rep.criteria.at(0);
  const auto& b = rep.criteria.at(1);
  c.expect(a.verdict.cls == SeriesClass::Convergent, std::string("thm4i verdict ") + to_string(a.verdict.cls));
  c.expect(a.implied_bound == ImpliedBound::SigmaGeRho, std::string("thm4i bound ") + to_string(a.implied_bound));
  c.expect(rep.reconciliation.at(0).status == Reconciliation::Consistent,
           std::string("thm4i reconciliation ") + to_string(rep.reconciliation.at(0).status));
  c.expect(b.verdict.cls == SeriesClass::Divergent, std::string("thm3i(eps=0.25) verdict ") + to_string(b.verdict.cls));
  c.expect(b.implied_bound == ImpliedBound::NecessaryFails,
           std::string("thm3i(eps=0.25) bound ") + to_string(b.implied_bound));
  c.expect(rep.reconciliation.at(1).status == Reconciliation::Consistent,
           std::string("thm3i(eps=0.25) reconciliation ") + to_string(rep.reconciliation.at(1).status));
  // context only: the any-eps refinement at the same rho
  const auto grid = thm3_upper_any_eps(cfg.exponent(), cfg.coefficient(), 0.75, halving_eps_grid(0.75), cfg.K);
  c.note("thm4i S_K=").note(fx(a.partial_sum_at_K())).note(" thm3i(eps=0.25) S_K=").note(fx(b.partial_sum_at_K()));
  c.note(" [any-eps: ").note(grid.eps_policy).note(" ").note(to_string(grid.verdict.cls)).note("]");
}

// 5
void cor3_routes(Checks& c) {
  const auto Fb = CdfModel::uniform(0.0, 1.0);
  const auto coeff = CoefficientLaw::deterministic(SequenceRule::parse("(k+1)/10"));
  for (auto [rho, want] : {std::pair{1.0, 4.5}, std::pair{2.0, 9.5}}) {
    const auto r = cor3_integral(Fb, coeff, rho, 10000);
    const std::string tag = "rho=" + fx(rho);
    c.expect(std::abs(r.value_sum_route - want) <= 1e-6, tag + " sum route " + fx(r.value_sum_route));
    c.expect(std::abs(r.value_quadrature_route - want) <= 1e-6, tag + " quadrature route " + fx(r.value_quadrature_route));
    c.note(tag).note(": ").note(fx(r.value_sum_route)).note("/").note(fx(r.value_quadrature_route)).note(" ");
  }
}

// 6
void property_suite(Checks& c) {
  const std::vector<CdfModel> fams = {
      CdfModel::exponential(1.0),   CdfModel::uniform(0.0, 2.0),
      CdfModel::pareto(1.0, 2.0),   CdfModel::lognormal(0.0, 1.0),
      CdfModel::degenerate(1.5),    CdfModel::scaled(CdfModel::uniform(0.0, 2.0), 3.0),
      CdfModel::shifted(CdfModel::exponential(2.0), -1.0),
  };
  std::size_t bad_cdf = 0, bad_q = 0;
  for (const auto& F : fams) {
    double prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = -5.0 + 15.0 * i / 999.0;
      const double v = F.cdf(x);
      if (!(v >= 0.0 && v <= 1.0 && v >= prev)) ++bad_cdf;
      prev = v;
    }
    if (F.support_lower() == F.support_upper()) continue;  // degenerate: no inversion
    for (int i = 1; i < 1000; ++i) {
      const double u = i / 1000.0;
      if (std::abs(F.cdf(F.quantile(u)) - u) > 1e-9) ++bad_q;
    }
  }
  c.expect(bad_cdf == 0, "cdf monotonicity/bounds violations: " + std::to_string(bad_cdf));
  c.expect(bad_q == 0, "quantile inversion misses: " + std::to_string(bad_q));

  auto cfg = load_named("canon.json");
  cfg.K = 20000;
  cfg.trials = 12;
  const auto r1 = run_experiment(cfg, 4);
  std::size_t bad_trace = 0;
  auto mono = [&](TailKind kind, const std::vector<WindowPoint>& tr) {
    TailEstimate e;
    e.kind = kind;
    e.window_trace = tr;
    if (!trace_is_monotone(e)) ++bad_trace;
  };
  for (const auto& t : r1.trials) {
    mono(TailKind::Liminf, t.alpha0_trace);
    mono(TailKind::Limsup, t.tau_trace);
    mono(TailKind::Limsup, t.h_trace);
  }
  c.expect(bad_trace == 0, "non-monotone window traces: " + std::to_string(bad_trace));

  // scale equivariance on deterministic draws; factors are powers of two
  std::size_t bad_scale = 0;
  const auto det_exp = ExponentLaw::deterministic(SequenceRule::parse("k^0.7"));
  const auto coeff = CoefficientLaw::deterministic(SequenceRule::parse("k"));
  const auto d = sample_trial(det_exp, coeff, 1, 0, 8192);
  const auto mu = neg_log_coefficients(coeff, d);
  const auto a = alpha0(mu, d.lambdas);
  const auto tt = tau(d.lambdas);
  for (double f : {0.25, 0.5, 2.0, 4.0, 64.0}) {
    auto s = d.lambdas;
    for (auto& l : s) l *= f;
    if (alpha0(mu, s).value != a.value / f) ++bad_scale;
    if (tau(s).value != tt.value / f) ++bad_scale;
  }
  c.expect(bad_scale == 0, "scale equivariance mismatches: " + std::to_string(bad_scale));

  const auto r2 = run_experiment(cfg, 1);
  c.expect(dump_report(r1) == dump_report(r2), "two seeded runs differ");

  std::vector<std::size_t> odd, even;
  for (std::size_t i = 0; i < cfg.trials; ++i) (i % 2 ? odd : even).push_back(i);
  auto part = run_trials(cfg, odd, 3);
  const auto rest = run_trials(cfg, even, 2);
  part.insert(part.begin(), rest.rbegin(), rest.rend());
  c.expect(dump_report(build_report(cfg, part)) == dump_report(r1), "partitioned run differs from whole run");
  c.note(fams.size()).note(" families, ").note(r1.trials.size() * 3).note(" traces, determinism + merge");
}

struct Proc {
  int code = -1;
  std::string out;
};

Proc run_cli(const std::string& args) {
  Proc p;
  const std::string cmd = std::string(DAL_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return p;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) p.out.append(buf.data(), n);
  const int st = pclose(f);
  p.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return p;
}

// 7
void cor1_pair(Checks& c) {
  const auto dir = fs::temp_directory_path() / ("dal_acceptance_cor1_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  for (const char* name : {"cor1_fast", "cor1_slow"}) {
    const auto out = dir / name;
    const auto p = run_cli("experiment --config " + (fs::path(DAL_CONFIG_DIR) / (std::string(name) + ".json")).string() +
                           " --out " + out.string());
    const std::string fast = name == std::string("cor1_fast") ? "fast" : "slow";
    c.expect(p.code == 0 || p.code == 3, fast + ": exit " + std::to_string(p.code));
    if (!fs::exists(out / "report.json")) {
      c.expect(false, fast + ": no report written");
      continue;
    }
    const auto rep = report_from_json(json::parse(read_file(out / "report.json")));
    std::size_t errs = 0;
    for (const auto& t : rep.trials) errs += t.errors.size();
    c.expect(errs == 0, fast + ": " + std::to_string(errs) + " trial errors");
    const auto status = rep.reconciliation.empty() ? std::string("none") : to_string(rep.reconciliation[0].status);
    if (fast == "fast") {
      c.expect(p.code == 3, "fast: exit code " + std::to_string(p.code) + ", want 3");
      c.expect(rep.any_tension(), "fast: no Tension reported");
      c.expect(rep.agg_alpha0.fraction_at_sentinel >= 0.5 && rep.agg_alpha0.median == kPosInf,
               "fast: alpha0 not at +inf sentinel (median " + fx(rep.agg_alpha0.median) + ")");
    }
    c.note(fast).note(": exit=").note(p.code).note(" ").note(status).note(" alpha0~").note(fx(rep.agg_alpha0.median));
    c.note(" sigma_abs~").note(fx(rep.agg_sigma_abs.median)).note("  ");
  }
  fs::remove_all(dir);
}

// 8
void thm1b(Checks& c) {
  const auto cfg = load_named("thm1b.json");
  const auto& spec = cfg.criteria.at(0);
  const auto r = evaluate_criterion(cfg, spec, false).at(0);
  c.expect(r.verdict.cls == SeriesClass::Divergent, std::string("verdict ") + to_string(r.verdict.cls));
  c.expect(r.implied_bound == ImpliedBound::SigmaLeRho, std::string("bound ") + to_string(r.implied_bound));
  c.expect(r.rho == -std::log(0.9), "rho=" + fx(r.rho));
  // terms 1 - 0.9^k for k = 0..K-1
  const double K = static_cast<double>(cfg.K);
  const double closed = K - (1.0 - std::pow(0.9, K)) / (1.0 - 0.9);
  c.expect(std::abs(r.partial_sum_at_K() - closed) <= 1e-6,
           "partial sum " + fx(r.partial_sum_at_K()) + " vs closed form " + fx(closed));
  c.note("S_K=").note(fx(r.partial_sum_at_K())).note(" closed=").note(fx(closed)).note(" rho=").note(fx(r.rho));
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<void(Checks&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance runner"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "deterministic chain", 1.0, deterministic_chain},
      {2, "tight chain instance", 5.0, tight_chain},
      {3, "Monte Carlo canonical family", 60.0, monte_carlo},
      {4, "criterion bracketing (canonical)", 2.0, bracketing},
      {5, "Stieltjes route agreement", 1.0, cor3_routes},
      {6, "property suite", 1e9, property_suite},
      {7, "Cor1 regime pair surfaces Tension", 1e9, cor1_pair},
      {8, "random-coefficient Thm1b", 1.0, thm1b},
  };
  int failures = 0;
  for (const auto& cr : all) {
    if (only && cr.id != only) continue;
    Checks c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.failed.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s < 1e8 && secs >= cr.budget_s)
      c.failed.push_back("runtime " + fx(secs) + " s over budget " + fx(cr.budget_s) + " s");
    const bool pass = c.failed.empty();
    failures += !pass;
    std::printf("%s %d %s (%.3f s): %s\n", pass ? "PASS" : "FAIL", cr.id, cr.title, secs, c.info.str().c_str());
    for (const auto& f : c.failed) std::printf("    - %s\n", f.c_str());
  }
  std::fflush(stdout);
  return failures ? 1 : 0;
}
