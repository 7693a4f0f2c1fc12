#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latefusion/data_model.hpp"
#include "latefusion/logistic_solver.hpp"
#include "latefusion/logit.hpp"

namespace latefusion {

/// Per-specialist mean and population standard deviation of clipped logits,
/// fitted on the validation split. apply(z) = (z - mean) / sigma.
struct Standardizer {
  std::vector<std::string> specialists;
  std::vector<double> means;
  std::vector<double> sigmas;

  double apply(std::size_t i, double logit) const { return (logit - means[i]) / sigmas[i]; }
  /// Standardized clipped logits in specialist order; throws std::out_of_range
  /// when the record lacks one of them.
  std::vector<double> transform(const std::map<std::string, double>& probs) const;
};

/// Needs >= 2 records carrying every specialist and nonzero logit variance.
Standardizer fit_standardizer(const std::vector<PredictionRecord>& validation,
                              const std::vector<std::string>& specialists);

enum class MetaKind { logreg, avg };
std::string_view to_string(MetaKind kind);
MetaKind parse_meta_kind(std::string_view text);

struct MetaOptions {
  double l2 = 0.0;
  double tol = 1e-9;
  int max_iter = 100;
};

/// Fused model: logit(p) = intercept + sum_i weights[i] * z_i with z_i the
/// standardized clipped logit of specialist i. For MetaKind::avg the weights
/// are uniform placeholders and prediction is the mean raw probability.
struct StackingModel {
  MetaKind kind = MetaKind::logreg;
  Standardizer standardizer;
  std::vector<double> weights;
  double intercept = 0.0;  // effective intercept in standardized units
  FitDiagnostics diagnostics;

  const std::vector<std::string>& specialists() const { return standardizer.specialists; }
};

/// `z` holds standardized logits row-major (one column per specialist of `standardizer`).
StackingModel fit_meta_logreg(const Standardizer& standardizer, std::span<const double> z, std::span<const int> labels,
                              const MetaOptions& options = {});

/// Standardizer + meta-learner from validation records in one go.
StackingModel fit_stacker(const std::vector<PredictionRecord>& validation, const std::vector<std::string>& specialists,
                          MetaKind kind = MetaKind::logreg, const MetaOptions& options = {});

/// intercept + sum w_i z_i. Throws std::out_of_range on a missing specialist;
/// callers route such records to the fallback instead.
double predict_meta_logit(const StackingModel& model, const std::map<std::string, double>& probs);
double predict_meta(const StackingModel& model, const std::map<std::string, double>& probs);

double average_fusion(std::span<const double> probs);

/// |w_i| / sum_j |w_j|.
std::vector<double> global_weights(const StackingModel& model);

struct ModalityAttribution {
  std::vector<std::string> specialists;
  std::vector<double> contributions;  // c_i = w_i z_i, logit units
  std::vector<double> shares;         // |c_i| / sum |c_j|
  std::string dominant;
  bool all_zero = false;      // every c_i == 0; shares set uniform
  bool dominant_tie = false;  // dominant chosen lexicographically among equal shares
};

ModalityAttribution modality_contributions(const StackingModel& model, const std::map<std::string, double>& probs);

enum class Agreement { agree_low, agree_high, conflict };
std::string_view to_string(Agreement a);

/// Sign pattern of raw clipped logits; p = 0.5 counts as low.
Agreement agreement_label(std::span<const double> probs);
Agreement agreement_label(double p_first, double p_second);

struct EquationTerm {
  std::string specialist;
  double weight = 0.0;
  double z = 0.0;
  double contribution = 0.0;
};

struct CaseExplanation {
  std::string episode_id;
  std::vector<std::pair<std::string, double>> votes;
  double intercept = 0.0;
  std::vector<EquationTerm> terms;
  double ensemble_logit = 0.0;
  double ensemble_probability = 0.0;
  double threshold = 0.5;
  int predicted_class = 0;
  std::string equation;  // rendered with 3 significant digits per term
  ModalityAttribution attribution;
  Agreement agreement = Agreement::agree_low;
};

CaseExplanation explain_case(const StackingModel& model, const PredictionRecord& record, double threshold = 0.5);

/// 100 * share rounded half-up to one decimal.
double share_percent(double share);

/// Multi-line human-readable rendering of an explanation.
std::string render_text(const CaseExplanation& explanation);

}  // namespace latefusion
