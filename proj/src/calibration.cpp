#include "latefusion/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "latefusion/metrics.hpp"

namespace latefusion {

namespace {

void require_both_classes(std::span<const double> scores, std::span<const int> labels, const char* who) {
  if (scores.size() != labels.size()) throw std::invalid_argument(fmt::format("{}: length mismatch", who));
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  const auto neg = std::count(labels.begin(), labels.end(), 0);
  if (pos + neg != static_cast<std::ptrdiff_t>(labels.size())) throw std::invalid_argument(fmt::format("{}: labels must be 0/1", who));
  if (pos == 0 || neg == 0) throw std::invalid_argument(fmt::format("{}: labels contain a single class", who));
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument(fmt::format("{}: score outside [0,1]", who));
  }
}

double temperature_loss(std::span<const double> z, std::span<const int> labels, double t) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += log_loss_term(z[i] / t, labels[i]);
  return total / static_cast<double>(z.size());
}

}  // namespace

std::string_view to_string(CalibratorKind kind) {
  switch (kind) {
    case CalibratorKind::platt:
      return "platt";
    case CalibratorKind::temperature:
      return "temperature";
    case CalibratorKind::isotonic:
      return "isotonic";
  }
  return "platt";
}

CalibratorKind parse_calibrator_kind(std::string_view text) {
  for (auto k : kAllCalibrators) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument(fmt::format("unknown calibrator '{}'", text));
}

void Calibrator::validate() const {
  switch (kind) {
    case CalibratorKind::platt:
      if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("platt: non-finite parameters");
      return;
    case CalibratorKind::temperature:
      if (!(temperature >= kMinTemperature && temperature <= kMaxTemperature)) {
        throw std::invalid_argument(fmt::format("temperature {} outside [{}, {}]", temperature, kMinTemperature, kMaxTemperature));
      }
      return;
    case CalibratorKind::isotonic:
      if (knots_x.empty() || knots_x.size() != knots_y.size()) throw std::invalid_argument("isotonic: malformed knots");
      for (std::size_t i = 1; i < knots_x.size(); ++i) {
        if (!(knots_x[i] > knots_x[i - 1])) throw std::invalid_argument("isotonic: knot abscissae not strictly increasing");
        if (knots_y[i] < knots_y[i - 1]) throw std::invalid_argument("isotonic: knot ordinates decreasing");
      }
      for (double y : knots_y) {
        if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("isotonic: ordinate outside [0,1]");
      }
      return;
  }
}

Calibrator fit_platt(std::span<const double> scores, std::span<const int> labels) {
  require_both_classes(scores, labels, "fit_platt");
  std::vector<double> z(scores.size());
  std::transform(scores.begin(), scores.end(), z.begin(), [](double s) { return to_logit(s); });
  const auto fit = fit_logistic(DesignMatrix{z, 1}, labels);
  Calibrator c;
  c.kind = CalibratorKind::platt;
  c.a = fit.slopes[0];
  c.b = fit.intercept;
  return c;
}

Calibrator fit_temperature(std::span<const double> scores, std::span<const int> labels) {
  require_both_classes(scores, labels, "fit_temperature");
  std::vector<double> z(scores.size());
  std::transform(scores.begin(), scores.end(), z.begin(), [](double s) { return to_logit(s); });
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = kMinTemperature;
  double hi = kMaxTemperature;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = temperature_loss(z, labels, x1);
  double f2 = temperature_loss(z, labels, x2);
  while (hi - lo > 1e-4) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = temperature_loss(z, labels, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = temperature_loss(z, labels, x2);
    }
  }
  Calibrator c;
  c.kind = CalibratorKind::temperature;
  c.temperature = std::clamp(0.5 * (lo + hi), kMinTemperature, kMaxTemperature);
  return c;
}

std::vector<double> pava(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw std::invalid_argument("pava: length mismatch");
  struct Block {
    double mean;
    double weight;
    std::size_t size;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("pava: weights must be positive");
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean >= blocks.back().mean) {
      const Block top = blocks.back();
      blocks.pop_back();
      auto& prev = blocks.back();
      const double w = prev.weight + top.weight;
      prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w;
      prev.weight = w;
      prev.size += top.size;
    }
  }
  std::vector<double> fitted;
  fitted.reserve(values.size());
  for (const auto& b : blocks) fitted.insert(fitted.end(), b.size, b.mean);
  return fitted;
}

Calibrator fit_isotonic(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() < 2) throw std::invalid_argument("fit_isotonic: need at least 2 points");
  require_both_classes(scores, labels, "fit_isotonic");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ws;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) sum += labels[idx[j++]];
    const double w = static_cast<double>(j - i);
    xs.push_back(scores[idx[i]]);
    ys.push_back(sum / w);
    ws.push_back(w);
    i = j;
  }
  const auto fitted = pava(ys, ws);

  Calibrator c;
  c.kind = CalibratorKind::isotonic;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const bool interior = i > 0 && i + 1 < xs.size() && fitted[i - 1] == fitted[i] && fitted[i + 1] == fitted[i];
    if (interior) continue;
    c.knots_x.push_back(xs[i]);
    c.knots_y.push_back(fitted[i]);
  }
  return c;
}

double apply_calibrator(const Calibrator& cal, double score) {
  if (!(score >= 0.0 && score <= 1.0)) throw std::invalid_argument("apply_calibrator: score outside [0,1]");
  switch (cal.kind) {
    case CalibratorKind::platt:
      return logistic(cal.a * to_logit(score) + cal.b);
    case CalibratorKind::temperature:
      return logistic(to_logit(score) / cal.temperature);
    case CalibratorKind::isotonic: {
      const auto& x = cal.knots_x;
      const auto& y = cal.knots_y;
      if (score <= x.front()) return y.front();
      if (score >= x.back()) return y.back();
      const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), score) - x.begin());
      const std::size_t lo = hi - 1;
      const double t = (score - x[lo]) / (x[hi] - x[lo]);
      return std::clamp(y[lo] + t * (y[hi] - y[lo]), 0.0, 1.0);
    }
  }
  return score;
}

std::vector<double> apply_calibrator(const Calibrator& cal, std::span<const double> scores) {
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = apply_calibrator(cal, scores[i]);
  return out;
}

CalibratorSelection select_calibrator(std::span<const double> val_scores, std::span<const int> val_labels,
                                      const std::vector<CalibratorKind>& candidates, std::size_t ece_bins) {
  if (candidates.empty()) throw std::invalid_argument("select_calibrator: no candidates");
  CalibratorSelection sel;
  sel.raw_validation_ece = ece_equal_frequency(val_scores, val_labels, ece_bins);
  // Evaluate in the fixed tie-break order regardless of how candidates were listed.
  std::vector<CalibratorKind> ordered;
  for (auto k : kAllCalibrators) {
    if (std::find(candidates.begin(), candidates.end(), k) != candidates.end()) ordered.push_back(k);
  }
  std::optional<std::size_t> best;
  for (auto kind : ordered) {
    CandidateResult r{kind, std::nullopt, 0.0, {}};
    try {
      Calibrator cal = kind == CalibratorKind::platt         ? fit_platt(val_scores, val_labels)
                       : kind == CalibratorKind::temperature ? fit_temperature(val_scores, val_labels)
                                                             : fit_isotonic(val_scores, val_labels);
      r.validation_ece = ece_equal_frequency(apply_calibrator(cal, val_scores), val_labels, ece_bins);
      r.calibrator = std::move(cal);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    sel.candidates.push_back(std::move(r));
    const auto& added = sel.candidates.back();
    if (!added.calibrator) continue;
    if (!best || added.validation_ece < sel.candidates[*best].validation_ece) {
      best = sel.candidates.size() - 1;
    }
  }
  if (!best) throw std::runtime_error("select_calibrator: every candidate failed to fit");
  sel.chosen = *sel.candidates[*best].calibrator;
  for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
    const auto& c = sel.candidates[i];
    if (i != *best && c.calibrator && c.validation_ece == sel.candidates[*best].validation_ece) sel.tie = true;
  }
  return sel;
}

std::string_view to_string(FallbackScenario s) {
  switch (s) {
    case FallbackScenario::both_present:
      return "both_present";
    case FallbackScenario::notes_absent:
      return "notes_absent";
    case FallbackScenario::vitals_absent:
      return "vitals_absent";
  }
  return "both_present";
}

FallbackScenario parse_fallback_scenario(std::string_view text) {
  for (auto s : kAllScenarios) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument(fmt::format("unknown scenario '{}'", text));
}

FallbackScenario scenario_for(const PredictionRecord& record, const ModalityRoles& roles) {
  const bool v = record.has(roles.vitals);
  const bool n = record.has(roles.notes);
  if (v && n) return FallbackScenario::both_present;
  if (v) return FallbackScenario::notes_absent;
  if (n) return FallbackScenario::vitals_absent;
  throw std::invalid_argument(fmt::format("episode '{}' carries neither '{}' nor '{}'", record.episode_id,
                                          roles.vitals, roles.notes));
}

double fallback_predict(FallbackScenario scenario, const StackingModel& model,
                        const std::map<std::string, Calibrator>& calibrators, const PredictionRecord& record,
                        const ModalityRoles& roles, FallbackMode mode) {
  if (scenario == FallbackScenario::both_present) return predict_meta(model, record.probs);
  const std::string& available = scenario == FallbackScenario::notes_absent ? roles.vitals : roles.notes;
  const std::string& missing = scenario == FallbackScenario::notes_absent ? roles.notes : roles.vitals;
  if (!record.has(available)) {
    throw std::invalid_argument(fmt::format("scenario {} needs '{}' but episode '{}' lacks it", to_string(scenario),
                                            available, record.episode_id));
  }
  const auto cal = calibrators.find(available);
  if (cal == calibrators.end()) throw std::invalid_argument(fmt::format("no calibrator for '{}'", available));
  const double calibrated = apply_calibrator(cal->second, record.prob(available));
  if (mode == FallbackMode::single_branch) return calibrated;
  auto probs = record.probs;
  probs[missing] = calibrated;
  return predict_meta(model, probs);
}

}  // namespace latefusion
