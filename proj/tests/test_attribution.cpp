#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "latefusion/attribution.hpp"
#include "latefusion/logit.hpp"
#include "latefusion/rng.hpp"
#include "oracles.hpp"

using namespace latefusion;

namespace {

MlpScorer random_mlp(std::uint64_t seed, std::size_t inputs, std::size_t hidden) {
  RandomStream rng(seed, 11);
  std::vector<double> w1, b1, w2;
  for (std::size_t i = 0; i < inputs * hidden; ++i) w1.push_back(rng.normal() / std::sqrt(static_cast<double>(inputs)));
  for (std::size_t i = 0; i < hidden; ++i) {
    b1.push_back(0.1 * rng.normal());
    w2.push_back(rng.normal());
  }
  return builtin_mlp_scorer(inputs, hidden, w1, b1, w2, 0.2 * rng.normal());
}

std::vector<double> random_point(RandomStream& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("linear score target: IG is exactly w * (x - x0)") {
  const auto lin = builtin_linear_scorer({0.5, -1.25, 2.0}, 0.3);
  const std::vector<double> x{1.0, 2.0, -0.5};
  IGConfig cfg;
  cfg.target = IgTarget::score;
  cfg.baseline = {0.2, 0.0, 0.5};
  for (int steps : {1, 7, 20}) {
    cfg.steps = steps;
    const auto ig = integrated_gradients(lin, x, cfg);
    CHECK(ig[0] == doctest::Approx(0.5 * 0.8).epsilon(1e-14));
    CHECK(ig[1] == doctest::Approx(-1.25 * 2.0).epsilon(1e-14));
    CHECK(ig[2] == doctest::Approx(2.0 * -1.0).epsilon(1e-14));
    CHECK(completeness_gap(lin, x, cfg, ig) < 1e-12);
  }
}

TEST_CASE("IG matches a finite-difference quadrature oracle") {
  const auto mlp = random_mlp(3, 5, 8);
  RandomStream rng(4, 0);
  const auto x = random_point(rng, 5);
  for (auto rule : {RiemannRule::right, RiemannRule::midpoint}) {
    IGConfig cfg;
    cfg.steps = 16;
    cfg.rule = rule;
    const auto ig = integrated_gradients(mlp, x, cfg);
    std::vector<double> want(5, 0.0);
    const auto f = [&](std::span<const double> p) { return mlp.value(p); };
    for (int s = 1; s <= cfg.steps; ++s) {
      const double a = rule == RiemannRule::right ? s / 16.0 : (s - 0.5) / 16.0;
      std::vector<double> p(5);
      for (std::size_t i = 0; i < 5; ++i) p[i] = a * x[i];
      const auto g = oracle::numeric_gradient(f, p);
      for (std::size_t i = 0; i < 5; ++i) want[i] += x[i] * g[i] / 16.0;
    }
    for (std::size_t i = 0; i < 5; ++i) CHECK(ig[i] == doctest::Approx(want[i]).epsilon(1e-6));
  }
}

TEST_CASE("completeness gap shrinks with steps and midpoint beats right endpoint") {
  const auto mlp = random_mlp(5, 6, 10);
  RandomStream rng(6, 0);
  std::vector<double> x = random_point(rng, 6);
  for (auto& v : x) v *= 2.0;
  IGConfig right;
  right.steps = 8;
  IGConfig mid = right;
  mid.rule = RiemannRule::midpoint;
  const double g_right8 = completeness_gap(mlp, x, right, integrated_gradients(mlp, x, right));
  const double g_mid8 = completeness_gap(mlp, x, mid, integrated_gradients(mlp, x, mid));
  right.steps = 256;
  const double g_right256 = completeness_gap(mlp, x, right, integrated_gradients(mlp, x, right));
  CHECK(g_right256 < g_right8);
  CHECK(g_mid8 < g_right8);
}

TEST_CASE("refining from 20 to 512 steps cuts the gap at least tenfold") {
  RandomStream rng(12, 0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mlp = random_mlp(100 + seed, 5, 8);
    const auto x = random_point(rng, 5);
    IGConfig coarse;
    IGConfig fine;
    fine.steps = 512;
    const double g20 = completeness_gap(mlp, x, coarse, integrated_gradients(mlp, x, coarse));
    const double g512 = completeness_gap(mlp, x, fine, integrated_gradients(mlp, x, fine));
    CHECK(g512 * 10.0 <= g20 + 1e-15);
  }
}

TEST_CASE("permuting hidden units leaves attributions unchanged") {
  const auto mlp = random_mlp(9, 3, 4);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<double> w1, b1, w2;
  for (std::size_t h : perm) {
    for (std::size_t i = 0; i < 3; ++i) w1.push_back(mlp.w1()[h * 3 + i]);
    b1.push_back(mlp.b1()[h]);
    w2.push_back(mlp.w2()[h]);
  }
  const auto permuted = builtin_mlp_scorer(3, 4, w1, b1, w2, mlp.b2());
  const std::vector<double> x{0.4, -1.1, 0.8};
  const auto a = integrated_gradients(mlp, x);
  const auto b = integrated_gradients(permuted, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
}

TEST_CASE("unchanged coordinates get zero attribution") {
  const auto mlp = random_mlp(7, 4, 6);
  std::vector<double> x{0.3, -1.0, 2.0, 0.7};
  IGConfig cfg;
  cfg.baseline = {0.3, 0.0, 2.0, 0.0};
  const auto ig = integrated_gradients(mlp, x, cfg);
  CHECK(ig[0] == 0.0);
  CHECK(ig[2] == 0.0);
  CHECK(ig[1] != 0.0);
}

TEST_CASE("analytic gradients agree with central differences") {
  RandomStream rng(8, 0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mlp = random_mlp(seed, 4, 5);
    const auto x = random_point(rng, 4);
    CHECK(gradient_check(mlp, x) < 1e-4);
    const auto g = mlp.gradient(x);
    const auto sg = mlp.score_gradient(x);
    const double p = mlp.value(x);
    for (std::size_t i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(p * (1 - p) * sg[i]).epsilon(1e-12));
  }
  CHECK(builtin_linear_scorer({1.0, 2.0}, 0.0).value(std::vector<double>{0.0, 0.0}) == 0.5);
}

TEST_CASE("scorer and IG validation") {
  CHECK_THROWS_AS(builtin_linear_scorer({}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(builtin_mlp_scorer(2, 2, {1.0}, {0, 0}, {1, 1}, 0.0), std::invalid_argument);
  const auto lin = builtin_linear_scorer({1.0, 2.0}, 0.0);
  CHECK_THROWS_AS(integrated_gradients(lin, std::vector<double>{1.0}), std::invalid_argument);
  IGConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS_AS(integrated_gradients(lin, std::vector<double>{1.0, 1.0}, cfg), std::invalid_argument);
  cfg.steps = 4;
  cfg.baseline = {0.0};
  CHECK_THROWS_AS(integrated_gradients(lin, std::vector<double>{1.0, 1.0}, cfg), std::invalid_argument);
}

TEST_CASE("one-hot groups are summed and decoded") {
  const std::vector<double> attr{0.1, -0.3, 0.05, 0.7, 0.2};
  const std::vector<FeatureGroup> groups{
      {"gcs_eye", {0, 1, 2}, {"none", "pain", "spont"}},
      {"age", {3}, {}},
      {"sex", {4}, {"male"}},
  };
  const std::vector<double> observed{0, 1, 0, 63, 0};
  const auto g = aggregate_onehot(attr, groups, observed);
  REQUIRE(g.size() == 3);
  CHECK(g[0].attribution == doctest::Approx(-0.15));
  CHECK(g[0].decoded == "pain");
  CHECK(g[1].attribution == 0.7);
  CHECK(g[1].decoded.empty());
  CHECK(g[2].decoded.empty());
  // total attribution is preserved
  double total = 0;
  for (const auto& x : g) total += x.attribution;
  CHECK(total == doctest::Approx(std::accumulate(attr.begin(), attr.end(), 0.0)));

  CHECK_THROWS_AS(aggregate_onehot(attr, {{"a", {0, 1, 2}, {}}, {"b", {2, 3, 4}, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_onehot(attr, {{"a", {0, 1, 2}, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_onehot(attr, {{"a", {0, 1, 2, 3, 9}, {}}}), std::invalid_argument);
}

TEST_CASE("top drivers split by sign") {
  const std::vector<Driver> items{{"a", 0.5}, {"b", -0.2}, {"c", 0.0}, {"d", 0.9}, {"e", 0.5}, {"f", -0.7}};
  const auto t = top_k_drivers(items, 2);
  REQUIRE(t.positive.size() == 2);
  CHECK(t.positive[0].name == "d");
  CHECK(t.positive[1].name == "a");  // tie with e keeps input order
  REQUIRE(t.negative.size() == 2);
  CHECK(t.negative[0].name == "f");
  CHECK(top_k_drivers(items, 10).positive.size() == 3);
}

TEST_CASE("saliency windows, heatmap mask and variable ranking") {
  AttributionMatrix m;
  m.hours = 6;
  m.variables = {"hr", "sbp"};
  // hr: + + 0 - - -   sbp: + - + 0 0 +
  m.saliency = {0.1, 0.2, 0.4, -0.1, 0.0, 0.3, -0.2, 0.0, -0.5, 0.0, -0.3, 0.05};
  m.observed = {80, 120, 90, 118, 95, 110, 100, 0, 105, 0, 98, 115};
  const auto w = saliency_windows(m);
  REQUIRE(w.size() == 2);
  CHECK(w[0].variable == "hr");
  CHECK(w[0].start_hour == 0);
  CHECK(w[0].end_hour == 1);
  CHECK(w[0].sign == 1);
  CHECK(w[0].peak_hour == 1);
  CHECK(w[0].observed_at_peak == 90.0);
  CHECK(w[1].start_hour == 3);
  CHECK(w[1].end_hour == 5);
  CHECK(w[1].sign == -1);
  CHECK(w[1].peak_saliency == -0.5);
  CHECK(saliency_windows(m, 1).size() == 6);

  // 12 cells, 25% -> 3 cells: 0.5, 0.4, then 0.3 twice (tie kept)
  const auto mask = heatmap_mask(m, 0.25);
  CHECK(std::count(mask.begin(), mask.end(), true) == 4);
  CHECK(mask[8]);
  CHECK(mask[2]);
  CHECK(mask[5]);
  CHECK(mask[10]);
  const auto one = heatmap_mask(m, 1e-6);
  CHECK(std::count(one.begin(), one.end(), true) == 1);
  CHECK_THROWS_AS(heatmap_mask(m, 0.0), std::invalid_argument);

  const auto rank = rank_variables_by_mean_abs(m);
  CHECK(rank[0].name == "hr");
  CHECK(rank[0].value == doctest::Approx((0.1 + 0.4 + 0.0 + 0.2 + 0.5 + 0.3) / 6.0));

  m.saliency.pop_back();
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
