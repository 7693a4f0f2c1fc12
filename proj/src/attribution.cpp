#include "latefusion/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "latefusion/logit.hpp"

namespace latefusion {

namespace {

void check_dim(const DifferentiableScorer& scorer, std::size_t n, const char* who) {
  if (n != scorer.dimension()) {
    throw std::invalid_argument(fmt::format("{}: input has {} values, scorer expects {}", who, n, scorer.dimension()));
  }
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(fmt::format("{} must be finite", what));
  }
}

double target_value(const DifferentiableScorer& s, std::span<const double> x, IgTarget t) {
  return t == IgTarget::score ? s.score(x) : s.value(x);
}

std::vector<double> target_gradient(const DifferentiableScorer& s, std::span<const double> x, IgTarget t) {
  return t == IgTarget::score ? s.score_gradient(x) : s.gradient(x);
}

std::vector<double> resolve_baseline(const IGConfig& cfg, std::size_t n) {
  if (cfg.baseline.empty()) return std::vector<double>(n, 0.0);
  if (cfg.baseline.size() != n) {
    throw std::invalid_argument(fmt::format("IG: baseline has {} values, input has {}", cfg.baseline.size(), n));
  }
  return cfg.baseline;
}

}  // namespace

double DifferentiableScorer::value(std::span<const double> x) const { return logistic(score(x)); }

std::vector<double> DifferentiableScorer::gradient(std::span<const double> x) const {
  const double p = value(x);
  auto g = score_gradient(x);
  for (auto& v : g) v *= p * (1.0 - p);
  return g;
}

LinearScorer::LinearScorer(std::vector<double> weights, double bias) : weights_(std::move(weights)), bias_(bias) {
  if (weights_.empty()) throw std::invalid_argument("linear scorer: no weights");
  check_finite(weights_, "linear scorer weights");
  if (!std::isfinite(bias_)) throw std::invalid_argument("linear scorer bias must be finite");
}

double LinearScorer::score(std::span<const double> x) const {
  check_dim(*this, x.size(), "linear scorer");
  double s = bias_;
  for (std::size_t i = 0; i < x.size(); ++i) s += weights_[i] * x[i];
  return s;
}

std::vector<double> LinearScorer::score_gradient(std::span<const double> x) const {
  check_dim(*this, x.size(), "linear scorer");
  return weights_;
}

MlpScorer::MlpScorer(std::size_t inputs, std::size_t hidden, std::vector<double> w1, std::vector<double> b1,
                     std::vector<double> w2, double b2)
    : inputs_(inputs), hidden_(hidden), w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(b2) {
  if (inputs_ == 0 || hidden_ == 0) throw std::invalid_argument("mlp scorer: layer sizes must be positive");
  if (w1_.size() != inputs_ * hidden_) {
    throw std::invalid_argument(fmt::format("mlp scorer: W1 needs {} values, got {}", inputs_ * hidden_, w1_.size()));
  }
  if (b1_.size() != hidden_ || w2_.size() != hidden_) throw std::invalid_argument("mlp scorer: hidden layer size mismatch");
  check_finite(w1_, "mlp W1");
  check_finite(b1_, "mlp b1");
  check_finite(w2_, "mlp w2");
  if (!std::isfinite(b2_)) throw std::invalid_argument("mlp b2 must be finite");
}

std::vector<double> MlpScorer::hidden_activations(std::span<const double> x) const {
  check_dim(*this, x.size(), "mlp scorer");
  std::vector<double> h(hidden_);
  for (std::size_t j = 0; j < hidden_; ++j) {
    double a = b1_[j];
    for (std::size_t i = 0; i < inputs_; ++i) a += w1_[j * inputs_ + i] * x[i];
    h[j] = std::tanh(a);
  }
  return h;
}

double MlpScorer::score(std::span<const double> x) const {
  const auto h = hidden_activations(x);
  double s = b2_;
  for (std::size_t j = 0; j < hidden_; ++j) s += w2_[j] * h[j];
  return s;
}

std::vector<double> MlpScorer::score_gradient(std::span<const double> x) const {
  const auto h = hidden_activations(x);
  std::vector<double> g(inputs_, 0.0);
  for (std::size_t j = 0; j < hidden_; ++j) {
    const double delta = w2_[j] * (1.0 - h[j] * h[j]);
    for (std::size_t i = 0; i < inputs_; ++i) g[i] += delta * w1_[j * inputs_ + i];
  }
  return g;
}

LinearScorer builtin_linear_scorer(std::vector<double> weights, double bias) {
  return LinearScorer(std::move(weights), bias);
}

MlpScorer builtin_mlp_scorer(std::size_t inputs, std::size_t hidden, std::vector<double> w1, std::vector<double> b1,
                             std::vector<double> w2, double b2) {
  return MlpScorer(inputs, hidden, std::move(w1), std::move(b1), std::move(w2), b2);
}

std::vector<double> integrated_gradients(const DifferentiableScorer& scorer, std::span<const double> x,
                                         const IGConfig& cfg) {
  check_dim(scorer, x.size(), "integrated_gradients");
  if (cfg.steps < 1) throw std::invalid_argument("integrated_gradients: steps must be >= 1");
  const auto x0 = resolve_baseline(cfg, x.size());
  const std::size_t n = x.size();
  std::vector<double> sum(n, 0.0);
  std::vector<double> point(n);
  const double steps = cfg.steps;
  for (int s = 1; s <= cfg.steps; ++s) {
    const double alpha = cfg.rule == RiemannRule::right ? s / steps : (s - 0.5) / steps;
    for (std::size_t i = 0; i < n; ++i) point[i] = x0[i] + alpha * (x[i] - x0[i]);
    const auto g = target_gradient(scorer, point, cfg.target);
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(g[i])) throw std::runtime_error("integrated_gradients: non-finite gradient");
      sum[i] += g[i];
    }
  }
  std::vector<double> attr(n);
  for (std::size_t i = 0; i < n; ++i) attr[i] = (x[i] - x0[i]) * (sum[i] / steps);
  return attr;
}

double completeness_gap(const DifferentiableScorer& scorer, std::span<const double> x, const IGConfig& cfg,
                        std::span<const double> attributions) {
  const auto x0 = resolve_baseline(cfg, x.size());
  const double total = std::accumulate(attributions.begin(), attributions.end(), 0.0);
  return std::abs(total - (target_value(scorer, x, cfg.target) - target_value(scorer, x0, cfg.target)));
}

double gradient_check(const DifferentiableScorer& scorer, std::span<const double> x, double h) {
  const auto analytic = scorer.gradient(x);
  std::vector<double> probe(x.begin(), x.end());
  double diff2 = 0.0;
  double na2 = 0.0;
  double nf2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = scorer.value(probe);
    probe[i] = x[i] - h;
    const double down = scorer.value(probe);
    probe[i] = x[i];
    const double fd = (up - down) / (2.0 * h);
    diff2 += (fd - analytic[i]) * (fd - analytic[i]);
    na2 += analytic[i] * analytic[i];
    nf2 += fd * fd;
  }
  return std::sqrt(diff2) / std::max({std::sqrt(na2), std::sqrt(nf2), 1e-10});
}

std::vector<GroupAttribution> aggregate_onehot(std::span<const double> attr, const std::vector<FeatureGroup>& groups,
                                               std::span<const double> observed) {
  if (!observed.empty() && observed.size() != attr.size()) {
    throw std::invalid_argument("aggregate_onehot: observed values do not match attribution length");
  }
  std::vector<int> owner(attr.size(), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!groups[g].categories.empty() && groups[g].categories.size() != groups[g].columns.size()) {
      throw std::invalid_argument(fmt::format("aggregate_onehot: group '{}' has mismatched category labels", groups[g].name));
    }
    for (std::size_t c : groups[g].columns) {
      if (c >= attr.size()) throw std::invalid_argument(fmt::format("aggregate_onehot: column {} out of range", c));
      if (owner[c] != -1) throw std::invalid_argument(fmt::format("aggregate_onehot: column {} in overlapping groups", c));
      owner[c] = static_cast<int>(g);
    }
  }
  for (std::size_t c = 0; c < owner.size(); ++c) {
    if (owner[c] == -1) throw std::invalid_argument(fmt::format("aggregate_onehot: column {} belongs to no group", c));
  }
  std::vector<GroupAttribution> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    GroupAttribution ga{g.name, 0.0, {}};
    for (std::size_t c : g.columns) ga.attribution += attr[c];
    if (!observed.empty() && !g.categories.empty()) {
      std::size_t hot = 0;
      for (std::size_t j = 1; j < g.columns.size(); ++j) {
        if (observed[g.columns[j]] > observed[g.columns[hot]]) hot = j;
      }
      if (observed[g.columns[hot]] > 0.0) ga.decoded = g.categories[hot];
    }
    out.push_back(std::move(ga));
  }
  return out;
}

TopDrivers top_k_drivers(const std::vector<Driver>& items, std::size_t k) {
  TopDrivers out;
  for (const auto& d : items) {
    if (d.value > 0.0) out.positive.push_back(d);
    if (d.value < 0.0) out.negative.push_back(d);
  }
  std::stable_sort(out.positive.begin(), out.positive.end(), [](const Driver& a, const Driver& b) { return a.value > b.value; });
  std::stable_sort(out.negative.begin(), out.negative.end(), [](const Driver& a, const Driver& b) { return a.value < b.value; });
  if (out.positive.size() > k) out.positive.resize(k);
  if (out.negative.size() > k) out.negative.resize(k);
  return out;
}

void AttributionMatrix::validate() const {
  if (hours == 0 || variables.empty()) throw std::invalid_argument("attribution matrix: empty grid");
  if (saliency.size() != hours * variables.size()) {
    throw std::invalid_argument(fmt::format("attribution matrix: expected {} x {} = {} values, got {}", hours,
                                            variables.size(), hours * variables.size(), saliency.size()));
  }
  if (!observed.empty() && observed.size() != saliency.size()) {
    throw std::invalid_argument("attribution matrix: observed values do not match grid shape");
  }
}

std::vector<SaliencyWindow> saliency_windows(const AttributionMatrix& m, std::size_t min_len) {
  m.validate();
  std::vector<SaliencyWindow> out;
  const auto sign_of = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
  for (std::size_t v = 0; v < m.cols(); ++v) {
    std::size_t h = 0;
    while (h < m.hours) {
      const int s = sign_of(m.at(h, v));
      std::size_t end = h;
      while (end + 1 < m.hours && sign_of(m.at(end + 1, v)) == s) ++end;
      if (s != 0 && end - h + 1 >= min_len) {
        SaliencyWindow w;
        w.variable = m.variables[v];
        w.start_hour = h;
        w.end_hour = end;
        w.sign = s;
        w.peak_hour = h;
        for (std::size_t t = h; t <= end; ++t) {
          if (std::abs(m.at(t, v)) > std::abs(m.at(w.peak_hour, v))) w.peak_hour = t;
        }
        w.peak_saliency = m.at(w.peak_hour, v);
        if (!m.observed.empty()) w.observed_at_peak = m.observed[w.peak_hour * m.cols() + v];
        out.push_back(std::move(w));
      }
      h = end + 1;
    }
  }
  return out;
}

std::vector<bool> heatmap_mask(const AttributionMatrix& m, double top_frac) {
  m.validate();
  if (!(top_frac > 0.0 && top_frac <= 1.0)) throw std::invalid_argument("heatmap_mask: top_frac must be in (0,1]");
  std::vector<double> mags(m.saliency.size());
  std::transform(m.saliency.begin(), m.saliency.end(), mags.begin(), [](double v) { return std::abs(v); });
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  auto keep = static_cast<std::size_t>(std::ceil(top_frac * static_cast<double>(sorted.size()) - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, sorted.size());
  const double threshold = sorted[keep - 1];
  std::vector<bool> mask(mags.size());
  for (std::size_t i = 0; i < mags.size(); ++i) mask[i] = mags[i] >= threshold;
  return mask;
}

std::vector<Driver> rank_variables_by_mean_abs(const AttributionMatrix& m) {
  m.validate();
  std::vector<Driver> out;
  for (std::size_t v = 0; v < m.cols(); ++v) {
    double total = 0.0;
    for (std::size_t h = 0; h < m.hours; ++h) total += std::abs(m.at(h, v));
    out.push_back({m.variables[v], total / static_cast<double>(m.hours)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Driver& a, const Driver& b) { return a.value > b.value; });
  return out;
}

}  // namespace latefusion
