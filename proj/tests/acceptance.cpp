// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "latefusion/attribution.hpp"
#include "latefusion/bootstrap.hpp"
#include "latefusion/calibration.hpp"
#include "latefusion/data_model.hpp"
#include "latefusion/fusion.hpp"
#include "latefusion/logit.hpp"
#include "latefusion/metrics.hpp"
#include "latefusion/rng.hpp"
#include "oracles.hpp"

using namespace latefusion;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

SyntheticConfig reference_config() {
  SyntheticConfig cfg;
  cfg.n_validation = 6000;
  cfg.n_test = 20000;
  cfg.prevalence = 0.11;
  cfg.sigma = 1.0;
  cfg.rho = 0.4;
  cfg.seed = 20240611;
  cfg.branches = {binormal_branch("ts", 0.85, cfg.sigma, cfg.prevalence),
                  binormal_branch("cn", 0.87, cfg.sigma, cfg.prevalence)};
  return cfg;
}

struct Cohort {
  std::vector<PredictionRecord> validation, test;
  std::vector<int> val_y, test_y;
};

const Cohort& reference_cohort() {
  static const Cohort c = [] {
    Cohort out;
    const auto all = generate_synthetic_cohort(reference_config());
    out.validation = filter_split(all, Split::validation);
    out.test = filter_split(all, Split::test);
    for (const auto& r : out.validation) out.val_y.push_back(r.label);
    for (const auto& r : out.test) out.test_y.push_back(r.label);
    return out;
  }();
  return c;
}

std::vector<double> column(const std::vector<PredictionRecord>& recs, const std::string& name) {
  std::vector<double> v;
  v.reserve(recs.size());
  for (const auto& r : recs) v.push_back(r.prob(name));
  return v;
}

const std::vector<std::string> kBranches{"ts", "cn"};

Outcome ac1() {
  const auto& c = reference_cohort();
  const auto model = fit_stacker(c.validation, kBranches);
  std::vector<double> ens;
  for (const auto& r : c.test) ens.push_back(predict_meta(model, r.probs));
  double best_auprc = 0, best_auroc = 0;
  for (const auto& b : kBranches) {
    const auto s = column(c.test, b);
    best_auprc = std::max(best_auprc, auprc(s, c.test_y));
    best_auroc = std::max(best_auroc, auroc(s, c.test_y));
  }
  const double e_auprc = auprc(ens, c.test_y), e_auroc = auroc(ens, c.test_y);
  return {e_auprc - best_auprc >= 0.005 && e_auroc - best_auroc >= 0.002,
          fmt::format("ensemble AUPRC {:.4f} vs best branch {:.4f} (+{:.4f}); AUROC {:.4f} vs {:.4f} (+{:.4f})", e_auprc,
                      best_auprc, e_auprc - best_auprc, e_auroc, best_auroc, e_auroc - best_auroc)};
}

Outcome ac2() {
  const auto& c = reference_cohort();
  const auto model = fit_stacker(c.validation, kBranches);
  std::vector<double> ens;
  for (const auto& r : c.test) ens.push_back(predict_meta(model, r.probs));
  const auto fit = calibration_slope_intercept(ens, c.test_y);
  return {fit.slope >= 0.90 && fit.slope <= 1.10 && std::abs(fit.intercept) <= 0.15,
          fmt::format("slope {:.4f}, intercept {:+.4f}", fit.slope, fit.intercept)};
}

Outcome ac3() {
  const auto& c = reference_cohort();
  const auto doubled = [](std::vector<double> p) {
    for (auto& v : p) v = logistic(2.0 * to_logit(v));
    return p;
  };
  const auto val = doubled(column(c.validation, "ts"));
  const auto test = doubled(column(c.test, "ts"));
  const auto sel = select_calibrator(val, c.val_y);
  const double before = ece_equal_frequency(test, c.test_y);
  const double after = ece_equal_frequency(apply_calibrator(sel.chosen, test), c.test_y);
  const double drop = 1.0 - after / before;
  return {drop >= 0.40, fmt::format("{} calibrator: test ECE {:.4f} -> {:.4f} ({:.1f}% reduction)",
                                    to_string(sel.chosen.kind), before, after, 100.0 * drop)};
}

Outcome ac4() {
  const auto& c = reference_cohort();
  const auto model = fit_stacker(c.validation, kBranches);
  std::map<std::string, Calibrator> cals;
  for (const auto& b : kBranches) cals[b] = select_calibrator(column(c.validation, b), c.val_y).chosen;
  std::vector<double> fallback, single;
  for (auto r : c.test) {
    r.probs.erase("cn");
    fallback.push_back(fallback_predict(FallbackScenario::notes_absent, model, cals, r));
  }
  for (const auto& r : c.test) single.push_back(apply_calibrator(cals.at("ts"), r.prob("ts")));
  const bool bitwise = fallback.size() == single.size() &&
                       std::memcmp(fallback.data(), single.data(), fallback.size() * sizeof(double)) == 0;
  const auto metrics = standard_metrics();
  std::size_t mismatched = 0;
  for (const auto& m : metrics) {
    const double a = m.fn(fallback, c.test_y), b = m.fn(single, c.test_y);
    if (std::memcmp(&a, &b, sizeof(double)) != 0) ++mismatched;
  }
  return {bitwise && mismatched == 0,
          fmt::format("{} outputs bitwise {}, {} of {} metrics differ", fallback.size(),
                      bitwise ? "identical" : "DIFFERENT", mismatched, metrics.size())};
}

Outcome ac5() {
  std::size_t auroc_bad = 0, auprc_bad = 0, const_bad = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    RandomStream rng(seed, 501);
    const std::size_t n = 2 + rng.below(199);
    const bool coarse = rng.uniform() < 0.5;
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(rng.uniform() < 0.3 ? 1 : 0);
      s.push_back(coarse ? static_cast<double>(rng.below(8)) / 7.0 : rng.uniform());
    }
    y[0] = 1;
    y[1] = 0;
    if (auroc(s, y) != oracle::auroc(s, y)) ++auroc_bad;
    const double diff = std::abs(auprc(s, y) - oracle::auprc(s, y));
    worst = std::max(worst, diff);
    if (diff > 1e-12) ++auprc_bad;
    std::size_t pos = 0;
    for (int v : y) pos += static_cast<std::size_t>(v);
    const std::vector<double> flat(n, rng.uniform());
    if (auprc(flat, y) != static_cast<double>(pos) / static_cast<double>(n)) ++const_bad;
  }
  return {auroc_bad == 0 && auprc_bad == 0 && const_bad == 0,
          fmt::format("1000 instances: AUROC mismatches {}, AUPRC mismatches {} (max diff {:.2e}), constant-predictor "
                      "mismatches {}",
                      auroc_bad, auprc_bad, worst, const_bad)};
}

Outcome ac6() {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    RandomStream rng(seed, 601);
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> v, w;
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back(rng.uniform() < 0.25 ? static_cast<double>(rng.below(3)) : rng.normal());
      w.push_back(0.25 + 4.0 * rng.uniform());
    }
    const auto got = pava(v, w);
    const auto want = oracle::isotonic(v, w);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  return {worst <= 1e-10, fmt::format("500 instances, max |PAVA - oracle| = {:.2e}", worst)};
}

// Fan-in scaled weights in both layers, as for a freshly initialised network.
MlpScorer random_mlp(RandomStream& rng, std::size_t inputs, std::size_t hidden) {
  std::vector<double> w1, b1, w2;
  for (std::size_t i = 0; i < inputs * hidden; ++i) w1.push_back(rng.normal() / std::sqrt(static_cast<double>(inputs)));
  for (std::size_t i = 0; i < hidden; ++i) {
    b1.push_back(0.2 * rng.normal());
    w2.push_back(rng.normal() / std::sqrt(static_cast<double>(hidden)));
  }
  return builtin_mlp_scorer(inputs, hidden, w1, b1, w2, 0.3 * rng.normal());
}

Outcome ac7() {
  RandomStream rng(7, 701);
  double linear_gap = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t d = 1 + rng.below(20);
    std::vector<double> w(d), x(d), x0(d);
    for (std::size_t i = 0; i < d; ++i) {
      w[i] = rng.normal();
      x[i] = 3.0 * rng.normal();
      x0[i] = rng.normal();
    }
    const auto lin = builtin_linear_scorer(w, rng.normal());
    for (int steps : {1, 2, 5, 20, 128, 512}) {
      IGConfig cfg;
      cfg.steps = steps;
      cfg.target = IgTarget::score;
      cfg.baseline = x0;
      linear_gap = std::max(linear_gap, completeness_gap(lin, x, cfg, integrated_gradients(lin, x, cfg)));
    }
  }

  double mlp_gap = 0, grad_err = 0, unchanged = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t d = 2 + rng.below(15);
    const auto mlp = random_mlp(rng, d, 4 + rng.below(13));
    std::vector<double> x(d), x0(d);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = rng.normal();
      x0[i] = rng.uniform() < 0.3 ? x[i] : 0.5 * rng.normal();
    }
    IGConfig cfg;
    cfg.steps = 512;
    cfg.baseline = x0;
    const auto ig = integrated_gradients(mlp, x, cfg);
    mlp_gap = std::max(mlp_gap, completeness_gap(mlp, x, cfg, ig));
    for (std::size_t i = 0; i < d; ++i) {
      if (x[i] == x0[i]) unchanged = std::max(unchanged, std::abs(ig[i]));
    }
    grad_err = std::max(grad_err, gradient_check(mlp, x));
  }
  return {linear_gap < 1e-12 && mlp_gap < 1e-3 && unchanged == 0.0 && grad_err < 1e-4,
          fmt::format("linear gap {:.2e}; MLP gap at S=512 {:.2e}; unchanged-coordinate |IG| {:.1e}; gradient rel. "
                      "error {:.2e}",
                      linear_gap, mlp_gap, unchanged, grad_err)};
}

Outcome ac8() {
  const auto& c = reference_cohort();
  const auto model = fit_stacker(c.validation, kBranches);
  double logit_err = 0, share_err = 0;
  for (const auto& r : c.test) {
    const auto a = modality_contributions(model, r.probs);
    double sum = model.intercept, shares = 0;
    for (double ci : a.contributions) sum += ci;
    for (double s : a.shares) shares += s;
    logit_err = std::max(logit_err, std::abs(sum - predict_meta_logit(model, r.probs)));
    share_err = std::max(share_err, std::abs(shares - 1.0));
  }
  return {logit_err < 1e-9 && share_err < 1e-12,
          fmt::format("{} episodes: max logit error {:.2e}, max share-sum error {:.2e}", c.test.size(), logit_err,
                      share_err)};
}

Outcome ac9() {
  const auto auroc_spec = standard_metric("auroc");
  // determinism
  const auto& c = reference_cohort();
  const auto ts = column(c.test, "ts");
  BootstrapOptions opts{1000, 99, 0.95, 0};
  const auto a = bootstrap_ci(auroc_spec, ts, c.test_y, opts);
  opts.threads = 1;
  const auto b = bootstrap_ci(auroc_spec, ts, c.test_y, opts);
  const bool identical = std::memcmp(&a.lower, &b.lower, sizeof(double)) == 0 &&
                         std::memcmp(&a.upper, &b.upper, sizeof(double)) == 0 &&
                         std::memcmp(&a.mean, &b.mean, sizeof(double)) == 0;

  // coverage of the analytic AUROC over independent cohorts
  SyntheticConfig cfg = reference_config();
  cfg.n_validation = 1;
  cfg.n_test = 2000;
  const double truth = binormal_auroc(cfg.branches[0].mu1 - cfg.branches[0].mu0, cfg.sigma);
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    cfg.seed = 5000 + static_cast<std::uint64_t>(rep);
    const auto test = filter_split(generate_synthetic_cohort(cfg), Split::test);
    std::vector<int> y;
    for (const auto& r : test) y.push_back(r.label);
    const auto ci = bootstrap_ci(auroc_spec, column(test, "ts"), y, BootstrapOptions{1000, 1234 + cfg.seed, 0.95, 0});
    if (ci.lower <= truth && truth <= ci.upper) ++covered;
  }
  return {identical && covered >= 93,
          fmt::format("repeat run bit-identical: {}; analytic AUROC {:.4f} covered in {}/100 repetitions",
                      identical ? "yes" : "NO", truth, covered)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"AC1", "fusion lift", 30, ac1},
      {"AC2", "stacker self-calibration", 10, ac2},
      {"AC3", "calibration repair", 10, ac3},
      {"AC4", "fallback identity", 5, ac4},
      {"AC5", "metric oracles", 0, ac5},
      {"AC6", "isotonic oracle", 0, ac6},
      {"AC7", "IG axioms", 0, ac7},
      {"AC8", "modality attribution exactness", 0, ac8},
      {"AC9", "bootstrap determinism and coverage", 120, ac9},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt::format("{:.2f}s", secs);
    if (c.budget_s > 0) {
      timing += fmt::format(" (limit {:.0f}s)", c.budget_s);
      if (secs >= c.budget_s) {
        o.pass = false;
        o.detail += "; runtime over limit";
      }
    }
    if (!o.pass) ++failures;
    fmt::print("{} {} {}: {} [{}]\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail, timing);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
