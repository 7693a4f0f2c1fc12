#include "latefusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "latefusion/logit.hpp"

namespace latefusion {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels, const char* who) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument(fmt::format("{}: {} scores but {} labels", who, scores.size(), labels.size()));
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument(fmt::format("{}: labels must be 0/1", who));
  }
  for (double s : scores) {
    if (std::isnan(s)) throw std::invalid_argument(fmt::format("{}: NaN score", who));
  }
}

std::vector<std::size_t> order_ascending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "auroc");
  const auto idx = order_ascending(scores);
  // Integer arithmetic: twice the (wins + 0.5 ties) count is exact.
  std::uint64_t neg_below = 0;
  std::uint64_t twice_concordant = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? pos : neg) += 1;
      ++j;
    }
    twice_concordant += 2 * pos * neg_below + pos * neg;
    neg_below += neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auroc: labels contain a single class");
  return static_cast<double>(twice_concordant) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "auprc");
  const std::size_t total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (total_pos == 0) throw std::invalid_argument("auprc: no positive labels");
  auto idx = order_ascending(scores);
  std::reverse(idx.begin(), idx.end());
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += static_cast<std::size_t>(labels[idx[j]]);
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

ThresholdMetrics thresholded_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores, labels, "thresholded_metrics");
  if (scores.empty()) throw std::invalid_argument("thresholded_metrics: empty input");
  ThresholdMetrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i]) {
      (pred ? m.tp : m.fn) += 1;
    } else {
      (pred ? m.fp : m.tn) += 1;
    }
  }
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  const double n = d(scores.size());
  m.accuracy = d(m.tp + m.tn) / n;
  if (m.tp + m.fp > 0) {
    m.precision = d(m.tp) / d(m.tp + m.fp);
  } else {
    m.precision_undefined = true;
  }
  if (m.tp + m.fn > 0) {
    m.recall = d(m.tp) / d(m.tp + m.fn);
  } else {
    m.recall_undefined = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1_undefined = true;
  }
  double specificity = 0.0;
  if (m.tn + m.fp > 0) {
    specificity = d(m.tn) / d(m.tn + m.fp);
  } else {
    m.specificity_undefined = true;
  }
  m.balanced_accuracy = 0.5 * (m.recall + specificity);
  return m;
}

double brier(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "brier");
  if (scores.empty()) throw std::invalid_argument("brier: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double e = scores[i] - labels[i];
    total += e * e;
  }
  return total / static_cast<double>(scores.size());
}

std::vector<ReliabilityBin> reliability_bins(std::span<const double> scores, std::span<const int> labels,
                                             std::size_t bins) {
  check_lengths(scores, labels, "reliability_bins");
  const std::size_t n = scores.size();
  if (bins == 0) throw std::invalid_argument("reliability_bins: bins must be >= 1");
  if (n < bins) throw std::invalid_argument(fmt::format("reliability_bins: n = {} < bins = {}", n, bins));
  const auto idx = order_ascending(scores);

  // Group g spans sorted positions [cut[g], cut[g+1]); a group is folded into
  // its predecessor when the scores on either side of the cut are equal.
  std::vector<std::size_t> cuts{0};
  for (std::size_t b = 1; b < bins; ++b) {
    const std::size_t cut = b * n / bins;
    if (scores[idx[cut - 1]] == scores[idx[cut]]) continue;
    cuts.push_back(cut);
  }
  cuts.push_back(n);

  std::vector<ReliabilityBin> out;
  out.reserve(cuts.size() - 1);
  for (std::size_t g = 0; g + 1 < cuts.size(); ++g) {
    ReliabilityBin bin;
    bin.count = cuts[g + 1] - cuts[g];
    bin.lower = scores[idx[cuts[g]]];
    bin.upper = scores[idx[cuts[g + 1] - 1]];
    double s = 0.0;
    double y = 0.0;
    for (std::size_t i = cuts[g]; i < cuts[g + 1]; ++i) {
      s += scores[idx[i]];
      y += labels[idx[i]];
    }
    bin.mean_predicted = s / static_cast<double>(bin.count);
    bin.event_rate = y / static_cast<double>(bin.count);
    out.push_back(bin);
  }
  return out;
}

double ece_equal_frequency(std::span<const double> scores, std::span<const int> labels, std::size_t bins) {
  const auto table = reliability_bins(scores, labels, bins);
  double ece = 0.0;
  for (const auto& b : table) {
    ece += static_cast<double>(b.count) * std::abs(b.mean_predicted - b.event_rate);
  }
  return ece / static_cast<double>(scores.size());
}

CalibrationFit calibration_slope_intercept(std::span<const double> scores, std::span<const int> labels,
                                           RecalibrationMode mode) {
  check_lengths(scores, labels, "calibration_slope_intercept");
  std::vector<double> z(scores.size());
  std::transform(scores.begin(), scores.end(), z.begin(), [](double s) { return to_logit(s); });
  LogisticOptions opts;
  // Starting at the identity map saves Newton steps on near-calibrated scores.
  opts.start = mode == RecalibrationMode::offset ? std::vector<double>{0.0} : std::vector<double>{0.0, 1.0};
  CalibrationFit out;
  if (mode == RecalibrationMode::offset) {
    opts.intercept_only = true;
    const double one = 1.0;
    const auto fit = fit_logistic(DesignMatrix{z, 1}, labels, opts, std::span<const double>(&one, 1));
    out.slope = 1.0;
    out.intercept = fit.intercept;
    out.diagnostics = fit.diagnostics;
    return out;
  }
  const auto fit = fit_logistic(DesignMatrix{z, 1}, labels, opts);
  out.slope = fit.slopes[0];
  out.intercept = fit.intercept;
  out.diagnostics = fit.diagnostics;
  return out;
}

}  // namespace latefusion
