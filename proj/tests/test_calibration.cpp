#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "latefusion/calibration.hpp"
#include "latefusion/metrics.hpp"
#include "latefusion/rng.hpp"
#include "oracles.hpp"

using namespace latefusion;

TEST_CASE("pava matches the min-max oracle") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    RandomStream rng(seed, 3);
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> v, w;
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back(rng.uniform() < 0.3 ? static_cast<double>(rng.below(3)) : rng.normal());
      w.push_back(0.5 + rng.uniform() * 3.0);
    }
    const auto got = pava(v, w);
    const auto want = oracle::isotonic(v, w);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
  }
}

TEST_CASE("pava hand case and validation") {
  const std::vector<double> v{1, 3, 2, 4};
  const std::vector<double> w{1, 1, 1, 1};
  const auto f = pava(v, w);
  CHECK(f == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK_THROWS_AS(pava(v, std::vector<double>{1, 0, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(pava(v, std::vector<double>{1, 1}), std::invalid_argument);
}

TEST_CASE("isotonic calibrator pools ties and interpolates between knots") {
  const std::vector<double> s{0.1, 0.1, 0.3, 0.5, 0.7, 0.9};
  const std::vector<int> y{0, 1, 0, 1, 1, 1};
  const auto c = fit_isotonic(s, y);
  // pooled points: 0.1 -> 0.5 (w 2), 0.3 -> 0, 0.5..0.9 -> 1
  // PAVA merges the first two: (0.5*2 + 0)/3 = 1/3 at x = 0.1 and 0.3
  REQUIRE(c.knots_x.size() == c.knots_y.size());
  CHECK(std::is_sorted(c.knots_y.begin(), c.knots_y.end()));
  CHECK(apply_calibrator(c, 0.1) == doctest::Approx(1.0 / 3.0));
  CHECK(apply_calibrator(c, 0.2) == doctest::Approx(1.0 / 3.0));
  CHECK(apply_calibrator(c, 0.4) == doctest::Approx(1.0 / 3.0 + 0.5 * (2.0 / 3.0)));
  CHECK(apply_calibrator(c, 0.0) == doctest::Approx(1.0 / 3.0));
  CHECK(apply_calibrator(c, 1.0) == 1.0);
  // flat run 0.5..0.9 keeps only its endpoints
  CHECK(c.knots_x == std::vector<double>{0.1, 0.3, 0.5, 0.9});
}

TEST_CASE("isotonic output is monotone and changes auroc only through new ties") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomStream rng(seed, 9);
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 80; ++i) {
      s.push_back(rng.uniform());
      y.push_back(rng.uniform() < s.back() ? 1 : 0);
    }
    y[0] = 1;
    y[1] = 0;
    const auto c = fit_isotonic(s, y);
    const auto t = apply_calibrator(c, s);
    std::int64_t gained = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (s[i] < s[j]) CHECK(t[i] <= t[j]);
        if (y[i] != 1 || y[j] != 0) continue;
        // a pair that becomes tied moves from win/loss to half credit
        if (s[i] != s[j] && t[i] == t[j]) gained += s[i] > s[j] ? -1 : 1;
      }
    }
    const auto pc = oracle::pair_count(s, y);
    CHECK(auroc(t, y) == doctest::Approx(auroc(s, y) + 0.5 * static_cast<double>(gained) / static_cast<double>(pc.pairs)));
  }
}

TEST_CASE("platt and temperature recover a known distortion") {
  RandomStream rng(21, 0);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 20000; ++i) {
    const double t = 1.5 * rng.normal() - 1.0;
    y.push_back(rng.uniform() < logistic(t) ? 1 : 0);
    s.push_back(logistic(2.0 * t));  // overconfident by a factor 2
  }
  const auto platt = fit_platt(s, y);
  CHECK(platt.a == doctest::Approx(0.5).epsilon(0.05));
  CHECK(std::abs(platt.b) < 0.05);
  const auto temp = fit_temperature(s, y);
  CHECK(temp.temperature == doctest::Approx(2.0).epsilon(0.05));
  CHECK(temp.temperature >= kMinTemperature);
}

TEST_CASE("temperature stays inside its bounds") {
  // perfectly separated labels push T toward zero
  const std::vector<double> s{0.2, 0.3, 0.7, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  const auto c = fit_temperature(s, y);
  CHECK(c.temperature >= kMinTemperature);
  CHECK(c.temperature <= kMinTemperature + 1e-3);
}

TEST_CASE("selection keeps the candidate with the lowest validation ece") {
  RandomStream rng(4, 0);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 4000; ++i) {
    const double t = rng.normal() - 1.5;
    y.push_back(rng.uniform() < logistic(t) ? 1 : 0);
    s.push_back(logistic(2.0 * t));
  }
  const auto sel = select_calibrator(s, y);
  REQUIRE(sel.candidates.size() == 3);
  double best = 1e9;
  for (const auto& c : sel.candidates) {
    REQUIRE(c.calibrator);
    best = std::min(best, c.validation_ece);
  }
  const auto chosen = std::find_if(sel.candidates.begin(), sel.candidates.end(),
                                   [&](const auto& c) { return c.kind == sel.chosen.kind; });
  CHECK(chosen->validation_ece == best);
  CHECK(best < sel.raw_validation_ece);

  // a restricted candidate list is honoured
  const auto only = select_calibrator(s, y, {CalibratorKind::temperature});
  CHECK(only.chosen.kind == CalibratorKind::temperature);
  CHECK(only.candidates.size() == 1);
}

TEST_CASE("calibrator validation and parsing") {
  Calibrator bad;
  bad.kind = CalibratorKind::temperature;
  bad.temperature = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  Calibrator iso;
  iso.kind = CalibratorKind::isotonic;
  iso.knots_x = {0.2, 0.1};
  iso.knots_y = {0.0, 1.0};
  CHECK_THROWS_AS(iso.validate(), std::invalid_argument);
  CHECK(parse_calibrator_kind("isotonic") == CalibratorKind::isotonic);
  CHECK_THROWS_AS(parse_calibrator_kind("beta"), std::invalid_argument);
  CHECK_THROWS_AS(apply_calibrator(Calibrator::identity_platt(), 1.5), std::invalid_argument);
  CHECK(apply_calibrator(Calibrator::identity_platt(), 0.3) == doctest::Approx(0.3));
}

TEST_CASE("fallback routes to the calibrated single branch") {
  RandomStream rng(8, 0);
  std::vector<PredictionRecord> val;
  for (int i = 0; i < 400; ++i) {
    PredictionRecord r;
    r.episode_id = std::to_string(i);
    r.split = Split::validation;
    r.label = rng.uniform() < 0.3 ? 1 : 0;
    r.probs["ts"] = logistic(r.label + rng.normal() - 1.0);
    r.probs["cn"] = logistic(r.label + rng.normal() - 1.0);
    val.push_back(r);
  }
  const auto model = fit_stacker(val, {"ts", "cn"});
  std::map<std::string, Calibrator> cals;
  Calibrator ts;
  ts.a = 0.8;
  ts.b = 0.1;
  cals["ts"] = ts;
  Calibrator cn;
  cn.kind = CalibratorKind::temperature;
  cn.temperature = 1.7;
  cals["cn"] = cn;

  PredictionRecord rec{"x", Split::test, 1, {{"ts", 0.62}, {"cn", 0.33}}};
  CHECK(fallback_predict(FallbackScenario::both_present, model, cals, rec) == predict_meta(model, rec.probs));
  CHECK(fallback_predict(FallbackScenario::notes_absent, model, cals, rec) == apply_calibrator(ts, 0.62));
  CHECK(fallback_predict(FallbackScenario::vitals_absent, model, cals, rec) == apply_calibrator(cn, 0.33));
  const double imputed = fallback_predict(FallbackScenario::notes_absent, model, cals, rec, {}, FallbackMode::impute);
  CHECK(imputed == predict_meta(model, {{"ts", 0.62}, {"cn", apply_calibrator(ts, 0.62)}}));

  PredictionRecord only_cn{"y", Split::test, 0, {{"cn", 0.4}}};
  CHECK(scenario_for(only_cn) == FallbackScenario::vitals_absent);
  CHECK_THROWS_AS(fallback_predict(FallbackScenario::notes_absent, model, cals, only_cn), std::invalid_argument);
  CHECK_THROWS_AS(scenario_for(PredictionRecord{"z", Split::test, 0, {}}), std::invalid_argument);
}
