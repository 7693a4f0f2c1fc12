#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latefusion/fusion.hpp"

namespace latefusion {

enum class CalibratorKind { platt, temperature, isotonic };
std::string_view to_string(CalibratorKind kind);
CalibratorKind parse_calibrator_kind(std::string_view text);

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 20.0;

/// Post-hoc probability map fitted on validation scores.
///  platt:       logistic(a * logit(p) + b)
///  temperature: logistic(logit(p) / T), T in [0.05, 20]
///  isotonic:    piecewise-linear through (knots_x, knots_y), clamped outside
struct Calibrator {
  CalibratorKind kind = CalibratorKind::platt;
  double a = 1.0;
  double b = 0.0;
  double temperature = 1.0;
  std::vector<double> knots_x;  // strictly increasing
  std::vector<double> knots_y;  // non-decreasing

  static Calibrator identity_platt() { return {}; }

  /// Throws std::invalid_argument if the parameters break the kind's invariants.
  void validate() const;
};

Calibrator fit_platt(std::span<const double> scores, std::span<const int> labels);

/// Golden-section search of mean log-loss over T in [0.05, 20] to |dT| <= 1e-4.
Calibrator fit_temperature(std::span<const double> scores, std::span<const int> labels);

/// Pool-adjacent-violators on labels sorted by score. Tied scores are pooled
/// into one weighted point first; every distinct score becomes a knot, with
/// interior points of flat runs dropped.
Calibrator fit_isotonic(std::span<const double> scores, std::span<const int> labels);

/// Weighted least-squares monotone (non-decreasing) fit of `values`, in order.
std::vector<double> pava(std::span<const double> values, std::span<const double> weights);

double apply_calibrator(const Calibrator& cal, double score);
std::vector<double> apply_calibrator(const Calibrator& cal, std::span<const double> scores);

struct CandidateResult {
  CalibratorKind kind;
  std::optional<Calibrator> calibrator;  // empty when fitting failed
  double validation_ece = 0.0;
  std::string error;
};

struct CalibratorSelection {
  Calibrator chosen;
  double raw_validation_ece = 0.0;
  std::vector<CandidateResult> candidates;
  bool tie = false;  // another candidate matched the chosen ECE exactly
};

inline const std::vector<CalibratorKind> kAllCalibrators = {CalibratorKind::platt, CalibratorKind::temperature,
                                                            CalibratorKind::isotonic};

/// Fits every candidate on the validation scores and keeps the one with the
/// lowest validation ECE; ties go to the earliest of platt, temperature,
/// isotonic. Throws std::runtime_error when no candidate fits.
CalibratorSelection select_calibrator(std::span<const double> val_scores, std::span<const int> val_labels,
                                      const std::vector<CalibratorKind>& candidates = kAllCalibrators,
                                      std::size_t ece_bins = 20);

// ---------------------------------------------------------------------------
// Missing-modality fallback

enum class FallbackScenario { both_present, notes_absent, vitals_absent };
std::string_view to_string(FallbackScenario s);
FallbackScenario parse_fallback_scenario(std::string_view text);
inline constexpr FallbackScenario kAllScenarios[] = {FallbackScenario::both_present, FallbackScenario::notes_absent,
                                                     FallbackScenario::vitals_absent};

enum class FallbackMode {
  single_branch,  // output the available branch's calibrated probability
  impute,         // feed the ensemble, filling the missing slot with the available branch's calibrated probability
};

struct ModalityRoles {
  std::string vitals = "ts";
  std::string notes = "cn";
};

/// both_present -> predict_meta; notes_absent -> vitals calibrator on p_vitals;
/// vitals_absent -> notes calibrator on p_notes. Throws std::invalid_argument
/// when the branch the scenario relies on is missing from the record.
double fallback_predict(FallbackScenario scenario, const StackingModel& model,
                        const std::map<std::string, Calibrator>& calibrators, const PredictionRecord& record,
                        const ModalityRoles& roles = {}, FallbackMode mode = FallbackMode::single_branch);

/// Scenario chosen from which branches the record actually carries.
FallbackScenario scenario_for(const PredictionRecord& record, const ModalityRoles& roles = {});

}  // namespace latefusion
