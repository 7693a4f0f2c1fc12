#include <cmath>
#include <vector>

#include "doctest.h"
#include "latefusion/bootstrap.hpp"
#include "latefusion/rng.hpp"

using namespace latefusion;

namespace {

void draw(std::uint64_t seed, int n, double prevalence, std::vector<double>& s, std::vector<int>& y) {
  RandomStream rng(seed, 0);
  s.clear();
  y.clear();
  for (int i = 0; i < n; ++i) {
    y.push_back(rng.uniform() < prevalence ? 1 : 0);
    s.push_back(1.0 / (1.0 + std::exp(-(y.back() * 1.2 - 1.0 + rng.normal()))));
  }
}

}  // namespace

TEST_CASE("nearest rank") {
  std::vector<double> v;
  for (int i = 1; i <= 1000; ++i) v.push_back(i);
  CHECK(nearest_rank(v, 0.025) == 25);
  CHECK(nearest_rank(v, 0.975) == 975);
  CHECK(nearest_rank(v, 1.0) == 1000);
  CHECK(nearest_rank(std::vector<double>{4.0}, 0.5) == 4.0);
  CHECK_THROWS_AS(nearest_rank({}, 0.5), std::invalid_argument);
}

TEST_CASE("bootstrap is bit-identical across runs and thread counts") {
  std::vector<double> s;
  std::vector<int> y;
  draw(1, 600, 0.2, s, y);
  BootstrapOptions one{200, 42, 0.95, 1};
  BootstrapOptions four{200, 42, 0.95, 4};
  const auto metrics = standard_metrics();
  const auto a = bootstrap_many(metrics, s, y, one);
  const auto b = bootstrap_many(metrics, s, y, four);
  const auto c = bootstrap_many(metrics, s, y, one);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lower == b[i].lower);
    CHECK(a[i].upper == b[i].upper);
    CHECK(a[i].mean == b[i].mean);
    CHECK(a[i].mean == c[i].mean);
  }
  const auto d = bootstrap_many(metrics, s, y, BootstrapOptions{200, 43, 0.95, 1});
  CHECK(d[0].lower != a[0].lower);
}

TEST_CASE("grouped metrics agree with their standalone functions") {
  std::vector<double> s;
  std::vector<int> y;
  draw(2, 300, 0.3, s, y);
  for (const auto& m : standard_metrics(0.4, 10)) {
    if (m.group.empty()) continue;
    CHECK(m.fn(s, y) == m.group_fn(s, y)[m.group_index]);
  }
  // the bootstrap point estimate is the full-sample metric
  const auto r = evaluate_scores("m", s, y, 0.4, 10, BootstrapOptions{50, 1, 0.9, 1});
  CHECK(r.at("f1").point == thresholded_metrics(s, y, 0.4).f1);
  CHECK(r.at("calibration_slope").point == calibration_slope_intercept(s, y).slope);
  CHECK(r.at("auroc").lower <= r.at("auroc").point);
  CHECK(r.at("auroc").upper >= r.at("auroc").point);
  CHECK_THROWS_AS(r.at("nope"), std::out_of_range);
}

TEST_CASE("resamples without a required class are redrawn") {
  // 2 positives in 40: P(resample has no positive) = (38/40)^40 ~ 0.13
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    y.push_back(i < 2 ? 1 : 0);
    s.push_back(0.01 * i);
  }
  const auto ci = bootstrap_ci(standard_metric("auroc"), s, y, BootstrapOptions{300, 5, 0.95, 1});
  CHECK(ci.redraws > 0);
  CHECK(ci.n_resamples == 300);
}

TEST_CASE("redraw budget and failure rate are enforced") {
  // no positive at all: every resample is redrawn until the budget runs out
  std::vector<double> s(200, 0.5);
  std::vector<int> y(200, 0);
  for (int i = 0; i < 200; ++i) s[i] = 0.001 * i;
  CHECK_THROWS_AS(bootstrap_ci(standard_metric("auroc"), s, y, BootstrapOptions{200, 1, 0.95, 1}), std::runtime_error);

  std::vector<double> s2;
  std::vector<int> y2;
  draw(3, 200, 0.3, s2, y2);
  MetricSpec flaky{"flaky", [](auto, auto) -> double { throw std::runtime_error("no"); }, false, false};
  CHECK_THROWS_AS(bootstrap_ci(flaky, s2, y2, BootstrapOptions{50, 1, 0.95, 1}), std::runtime_error);
  CHECK_THROWS_AS(bootstrap_ci(standard_metric("brier"), s2, y2, BootstrapOptions{0, 1, 0.95, 1}), std::invalid_argument);
  CHECK_THROWS_AS(standard_metric("mcc"), std::invalid_argument);
}
