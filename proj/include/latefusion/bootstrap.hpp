#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "latefusion/metrics.hpp"

namespace latefusion {

using MetricFn = std::function<double(std::span<const double>, std::span<const int>)>;

/// A scalar metric plus the classes a resample must contain for it to be defined.
struct MetricSpec {
  std::string name;
  MetricFn fn;
  bool needs_positive = false;
  bool needs_negative = false;
  /// Metrics with the same non-empty group are produced together by one
  /// group_fn call per resample (element group_index); fn stays usable alone.
  std::string group;
  std::function<std::vector<double>(std::span<const double>, std::span<const int>)> group_fn;
  std::size_t group_index = 0;
};

/// The evaluation metric set, in reporting order: auroc, auprc, f1, precision,
/// recall, accuracy, balanced_accuracy, brier, ece, calibration_slope,
/// calibration_intercept.
std::vector<MetricSpec> standard_metrics(double threshold = 0.5, std::size_t ece_bins = 20);
/// One entry of standard_metrics() by name; throws std::invalid_argument if unknown.
MetricSpec standard_metric(const std::string& name, double threshold = 0.5, std::size_t ece_bins = 20);

struct BootstrapOptions {
  std::size_t n_resamples = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct BootstrapCI {
  double point = 0.0;  // metric on the full sample
  double mean = 0.0;   // mean over resamples
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n_resamples = 0;  // resamples that contributed a value
  std::size_t redraws = 0;      // resamples redrawn for lacking a required class
};

/// Percentile bootstrap. Resample b uses RandomStream(seed, b, attempt), so
/// results are bit-identical for a given seed regardless of thread count.
/// Resamples missing a required class are redrawn (at most 10 * n_resamples
/// redraws overall). Throws std::runtime_error when the redraw budget runs out
/// or the metric throws on more than 10% of resamples.
BootstrapCI bootstrap_ci(const MetricSpec& metric, std::span<const double> scores, std::span<const int> labels,
                         const BootstrapOptions& options = {});

/// Several metrics over shared resamples (class requirements are combined).
std::vector<BootstrapCI> bootstrap_many(const std::vector<MetricSpec>& metrics, std::span<const double> scores,
                                        std::span<const int> labels, const BootstrapOptions& options = {});

/// Nearest-rank percentile of an ascending-sorted vector, q in (0, 1].
double nearest_rank(const std::vector<double>& sorted, double q);

struct MetricRow {
  std::string name;
  BootstrapCI ci;
};

struct MetricReport {
  std::string model;
  double threshold = 0.5;
  std::size_t ece_bins = 20;
  BootstrapOptions bootstrap;
  std::vector<MetricRow> rows;

  const BootstrapCI& at(const std::string& name) const;
};

/// Point estimates and bootstrap CIs of standard_metrics() for one score vector.
MetricReport evaluate_scores(const std::string& model, std::span<const double> scores, std::span<const int> labels,
                             double threshold, std::size_t ece_bins, const BootstrapOptions& options);

}  // namespace latefusion
