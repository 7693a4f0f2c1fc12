#pragma once

#include <span>
#include <vector>

#include "latefusion/logistic_solver.hpp"

namespace latefusion {

// Every metric takes scores in [0,1] (or any real for the rank metrics) and
// 0/1 labels of equal length; mismatched lengths throw std::invalid_argument.

/// Mann-Whitney concordance (wins + 0.5 ties) / (n_pos * n_neg). Needs both classes.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Average precision with tied scores forming a single threshold step:
/// sum_k (R_k - R_{k-1}) P_k over distinct scores in descending order. Needs a positive.
double auprc(std::span<const double> scores, std::span<const int> labels);

struct ThresholdMetrics {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  // Set when the metric's denominator was zero and 0 was reported instead.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  bool specificity_undefined = false;
};

/// score >= threshold counts as a positive prediction.
ThresholdMetrics thresholded_metrics(std::span<const double> scores, std::span<const int> labels,
                                     double threshold = 0.5);

double brier(std::span<const double> scores, std::span<const int> labels);

struct ReliabilityBin {
  double lower = 0.0;  // smallest score in the bin
  double upper = 0.0;  // largest score in the bin
  std::size_t count = 0;
  double mean_predicted = 0.0;
  double event_rate = 0.0;
};

/// Equal-frequency bins: scores sorted ascending, cut into `bins` groups whose
/// sizes differ by at most one, then adjacent groups whose boundary scores are
/// tied are merged. Needs n >= bins.
std::vector<ReliabilityBin> reliability_bins(std::span<const double> scores, std::span<const int> labels,
                                             std::size_t bins = 20);

/// sum_b (n_b / n) |mean score_b - event rate_b| over reliability_bins.
double ece_equal_frequency(std::span<const double> scores, std::span<const int> labels, std::size_t bins = 20);

enum class RecalibrationMode {
  joint,   // slope and intercept fitted together
  offset,  // slope fixed at 1, intercept fitted on the logit offset
};

struct CalibrationFit {
  double slope = 1.0;
  double intercept = 0.0;
  FitDiagnostics diagnostics;
};

/// Logistic recalibration of labels on to_logit(score).
CalibrationFit calibration_slope_intercept(std::span<const double> scores, std::span<const int> labels,
                                           RecalibrationMode mode = RecalibrationMode::joint);

}  // namespace latefusion
