#include "latefusion/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "latefusion/rng.hpp"

namespace latefusion {

std::vector<MetricSpec> standard_metrics(double threshold, std::size_t ece_bins) {
  const auto thr_all = [threshold](std::span<const double> s, std::span<const int> y) {
    const auto t = thresholded_metrics(s, y, threshold);
    return std::vector<double>{t.f1, t.precision, t.recall, t.accuracy, t.balanced_accuracy};
  };
  const auto recal_all = [](std::span<const double> s, std::span<const int> y) {
    const auto fit = calibration_slope_intercept(s, y);
    return std::vector<double>{fit.slope, fit.intercept};
  };
  const auto member = [](std::string name, auto group_fn, std::string group, std::size_t index, bool pos, bool neg) {
    MetricSpec m;
    m.name = std::move(name);
    m.fn = [group_fn, index](std::span<const double> s, std::span<const int> y) { return group_fn(s, y)[index]; };
    m.needs_positive = pos;
    m.needs_negative = neg;
    m.group = std::move(group);
    m.group_fn = group_fn;
    m.group_index = index;
    return m;
  };
  const auto single = [](std::string name, MetricFn fn, bool pos, bool neg) {
    MetricSpec m;
    m.name = std::move(name);
    m.fn = std::move(fn);
    m.needs_positive = pos;
    m.needs_negative = neg;
    return m;
  };
  return {
      single("auroc", [](auto s, auto y) { return auroc(s, y); }, true, true),
      single("auprc", [](auto s, auto y) { return auprc(s, y); }, true, false),
      member("f1", thr_all, "threshold", 0, false, false),
      member("precision", thr_all, "threshold", 1, false, false),
      member("recall", thr_all, "threshold", 2, false, false),
      member("accuracy", thr_all, "threshold", 3, false, false),
      member("balanced_accuracy", thr_all, "threshold", 4, false, false),
      single("brier", [](auto s, auto y) { return brier(s, y); }, false, false),
      single("ece", [ece_bins](auto s, auto y) { return ece_equal_frequency(s, y, ece_bins); }, false, false),
      member("calibration_slope", recal_all, "recalibration", 0, true, true),
      member("calibration_intercept", recal_all, "recalibration", 1, true, true),
  };
}

MetricSpec standard_metric(const std::string& name, double threshold, std::size_t ece_bins) {
  for (auto& m : standard_metrics(threshold, ece_bins)) {
    if (m.name == name) return m;
  }
  throw std::invalid_argument(fmt::format("unknown metric '{}'", name));
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("nearest_rank: empty sample");
  // The epsilon keeps q * n = 975 from rounding up to rank 976.
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<BootstrapCI> bootstrap_many(const std::vector<MetricSpec>& metrics, std::span<const double> scores,
                                        std::span<const int> labels, const BootstrapOptions& options) {
  if (scores.size() != labels.size()) throw std::invalid_argument("bootstrap: scores/labels length mismatch");
  if (scores.empty()) throw std::invalid_argument("bootstrap: empty sample");
  if (options.n_resamples == 0) throw std::invalid_argument("bootstrap: n_resamples must be >= 1");
  if (!(options.level > 0.0 && options.level < 1.0)) throw std::invalid_argument("bootstrap: level must be in (0,1)");
  const bool need_pos = std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.needs_positive; });
  const bool need_neg = std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.needs_negative; });

  const std::size_t n = scores.size();
  const std::size_t n_metrics = metrics.size();
  const std::size_t B = options.n_resamples;

  // Resamples are emitted in score order, which the metrics are insensitive
  // to and which makes their internal sorts cheap.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<double> values(B * n_metrics, 0.0);
  std::vector<unsigned char> ok(B * n_metrics, 0);
  std::vector<std::size_t> redraws(B, 0);
  const std::size_t redraw_budget = 10 * B;
  std::atomic<std::size_t> redraws_total{0};
  std::atomic<bool> budget_exhausted{false};

  const auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> counts(n);
    std::vector<double> rs;
    std::vector<int> ry;
    rs.reserve(n);
    ry.reserve(n);
    for (std::size_t b = begin; b < end && !budget_exhausted.load(); ++b) {
      for (std::uint64_t attempt = 0;; ++attempt) {
        RandomStream rng(options.seed, b, attempt);
        std::fill(counts.begin(), counts.end(), 0U);
        for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
        rs.clear();
        ry.clear();
        std::size_t pos = 0;
        for (std::size_t k : order) {
          for (std::uint32_t c = 0; c < counts[k]; ++c) {
            rs.push_back(scores[k]);
            ry.push_back(labels[k]);
          }
          pos += static_cast<std::size_t>(labels[k]) * counts[k];
        }
        if ((need_pos && pos == 0) || (need_neg && pos == n)) {
          ++redraws[b];
          if (redraws_total.fetch_add(1) + 1 > redraw_budget) {
            budget_exhausted.store(true);
            return;
          }
          continue;
        }
        break;
      }
      std::map<std::string, std::optional<std::vector<double>>> shared;
      for (std::size_t m = 0; m < n_metrics; ++m) {
        try {
          double v = 0.0;
          if (!metrics[m].group.empty() && metrics[m].group_fn) {
            auto it = shared.find(metrics[m].group);
            if (it == shared.end()) {
              it = shared.emplace(metrics[m].group, std::nullopt).first;
              it->second = metrics[m].group_fn(rs, ry);
            }
            if (!it->second) continue;
            v = it->second->at(metrics[m].group_index);
          } else {
            v = metrics[m].fn(rs, ry);
          }
          if (std::isfinite(v)) {
            values[b * n_metrics + m] = v;
            ok[b * n_metrics + m] = 1;
          }
        } catch (const std::exception&) {
          // counted as undefined below
        }
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, B));
  if (threads <= 1) {
    worker(0, B);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (B + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(B, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (budget_exhausted.load()) {
    throw std::runtime_error(fmt::format(
        "bootstrap: more than {} redraws needed to obtain resamples containing both required classes", redraw_budget));
  }

  const std::size_t total_redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
  const double alpha = 1.0 - options.level;
  std::vector<BootstrapCI> out(n_metrics);
  for (std::size_t m = 0; m < n_metrics; ++m) {
    auto& ci = out[m];
    ci.point = metrics[m].fn(scores, labels);
    std::vector<double> vals;
    vals.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
      if (ok[b * n_metrics + m]) vals.push_back(values[b * n_metrics + m]);
    }
    const std::size_t failed = B - vals.size();
    if (static_cast<double>(failed) > 0.1 * static_cast<double>(B)) {
      throw std::runtime_error(fmt::format("bootstrap: metric '{}' undefined on {} of {} resamples (> 10%)",
                                           metrics[m].name, failed, B));
    }
    // Summation in resample order keeps the mean independent of threading.
    ci.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    std::sort(vals.begin(), vals.end());
    ci.lower = nearest_rank(vals, alpha / 2.0);
    ci.upper = nearest_rank(vals, 1.0 - alpha / 2.0);
    ci.n_resamples = vals.size();
    ci.redraws = total_redraws;
  }
  return out;
}

BootstrapCI bootstrap_ci(const MetricSpec& metric, std::span<const double> scores, std::span<const int> labels,
                         const BootstrapOptions& options) {
  return bootstrap_many({metric}, scores, labels, options).front();
}

const BootstrapCI& MetricReport::at(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r.ci;
  }
  throw std::out_of_range(fmt::format("metric report for '{}' has no '{}'", model, name));
}

MetricReport evaluate_scores(const std::string& model, std::span<const double> scores, std::span<const int> labels,
                             double threshold, std::size_t ece_bins, const BootstrapOptions& options) {
  MetricReport report;
  report.model = model;
  report.threshold = threshold;
  report.ece_bins = ece_bins;
  report.bootstrap = options;
  const auto metrics = standard_metrics(threshold, ece_bins);
  const auto cis = bootstrap_many(metrics, scores, labels, options);
  for (std::size_t i = 0; i < metrics.size(); ++i) report.rows.push_back({metrics[i].name, cis[i]});
  return report;
}

}  // namespace latefusion
