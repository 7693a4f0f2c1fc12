#include "latefusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace latefusion {

std::vector<double> Standardizer::transform(const std::map<std::string, double>& probs) const {
  std::vector<double> z(specialists.size());
  for (std::size_t i = 0; i < specialists.size(); ++i) {
    const auto it = probs.find(specialists[i]);
    if (it == probs.end()) throw std::out_of_range(fmt::format("missing specialist '{}'", specialists[i]));
    z[i] = apply(i, to_logit(it->second));
  }
  return z;
}

Standardizer fit_standardizer(const std::vector<PredictionRecord>& validation,
                              const std::vector<std::string>& specialists) {
  if (specialists.empty()) throw std::invalid_argument("fit_standardizer: no specialists");
  Standardizer s;
  s.specialists = specialists;
  for (const auto& name : specialists) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : validation) {
      if (!r.has(name)) throw std::invalid_argument(fmt::format("fit_standardizer: episode '{}' lacks '{}'", r.episode_id, name));
      sum += to_logit(r.prob(name));
      ++n;
    }
    if (n < 2) throw std::invalid_argument(fmt::format("fit_standardizer: fewer than 2 validation values for '{}'", name));
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : validation) {
      const double d = to_logit(r.prob(name)) - mean;
      ss += d * d;
    }
    const double sigma = std::sqrt(ss / static_cast<double>(n));
    if (!(sigma > 0.0)) throw std::invalid_argument(fmt::format("fit_standardizer: zero variance for '{}'", name));
    s.means.push_back(mean);
    s.sigmas.push_back(sigma);
  }
  return s;
}

std::string_view to_string(MetaKind kind) { return kind == MetaKind::avg ? "avg" : "logreg"; }

MetaKind parse_meta_kind(std::string_view text) {
  if (text == "logreg") return MetaKind::logreg;
  if (text == "avg") return MetaKind::avg;
  throw std::invalid_argument(fmt::format("unknown meta-learner '{}' (expected logreg or avg)", text));
}

StackingModel fit_meta_logreg(const Standardizer& standardizer, std::span<const double> z, std::span<const int> labels,
                              const MetaOptions& options) {
  const std::size_t k = standardizer.specialists.size();
  LogisticOptions lo;
  lo.l2 = options.l2;
  lo.tol = options.tol;
  lo.max_iter = options.max_iter;
  const auto fit = fit_logistic(DesignMatrix{z, k}, labels, lo);
  StackingModel model;
  model.kind = MetaKind::logreg;
  model.standardizer = standardizer;
  model.weights = fit.slopes;
  model.intercept = fit.intercept;
  model.diagnostics = fit.diagnostics;
  return model;
}

StackingModel fit_stacker(const std::vector<PredictionRecord>& validation, const std::vector<std::string>& specialists,
                          MetaKind kind, const MetaOptions& options) {
  if (validation.empty()) throw std::invalid_argument("no validation records");
  auto standardizer = fit_standardizer(validation, specialists);
  if (kind == MetaKind::avg) {
    StackingModel model;
    model.kind = MetaKind::avg;
    model.standardizer = std::move(standardizer);
    model.weights.assign(specialists.size(), 1.0 / static_cast<double>(specialists.size()));
    model.diagnostics.converged = true;
    return model;
  }
  std::vector<double> z;
  z.reserve(validation.size() * specialists.size());
  std::vector<int> y;
  y.reserve(validation.size());
  for (const auto& r : validation) {
    const auto row = standardizer.transform(r.probs);
    z.insert(z.end(), row.begin(), row.end());
    y.push_back(r.label);
  }
  return fit_meta_logreg(standardizer, z, y, options);
}

double predict_meta_logit(const StackingModel& model, const std::map<std::string, double>& probs) {
  if (model.kind == MetaKind::avg) {
    std::vector<double> p;
    for (const auto& name : model.specialists()) {
      const auto it = probs.find(name);
      if (it == probs.end()) throw std::out_of_range(fmt::format("missing specialist '{}'", name));
      p.push_back(it->second);
    }
    return to_logit(average_fusion(p));
  }
  const auto z = model.standardizer.transform(probs);
  double eta = model.intercept;
  for (std::size_t i = 0; i < z.size(); ++i) eta += model.weights[i] * z[i];
  return eta;
}

double predict_meta(const StackingModel& model, const std::map<std::string, double>& probs) {
  if (model.kind == MetaKind::avg) {
    std::vector<double> p;
    for (const auto& name : model.specialists()) {
      const auto it = probs.find(name);
      if (it == probs.end()) throw std::out_of_range(fmt::format("missing specialist '{}'", name));
      p.push_back(it->second);
    }
    return average_fusion(p);
  }
  return logistic(predict_meta_logit(model, probs));
}

double average_fusion(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("average_fusion: no probabilities");
  return std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
}

std::vector<double> global_weights(const StackingModel& model) {
  double total = 0.0;
  for (double w : model.weights) total += std::abs(w);
  if (!(total > 0.0)) throw std::invalid_argument("global_weights: all weights are zero");
  std::vector<double> out;
  out.reserve(model.weights.size());
  for (double w : model.weights) out.push_back(std::abs(w) / total);
  return out;
}

ModalityAttribution modality_contributions(const StackingModel& model, const std::map<std::string, double>& probs) {
  if (model.kind != MetaKind::logreg) throw std::invalid_argument("modality contributions need a logreg meta-learner");
  const auto z = model.standardizer.transform(probs);
  ModalityAttribution a;
  a.specialists = model.specialists();
  const std::size_t k = z.size();
  a.contributions.resize(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    a.contributions[i] = model.weights[i] * z[i];
    total += std::abs(a.contributions[i]);
  }
  a.shares.resize(k);
  if (total > 0.0) {
    for (std::size_t i = 0; i < k; ++i) a.shares[i] = std::abs(a.contributions[i]) / total;
  } else {
    a.all_zero = true;
    std::fill(a.shares.begin(), a.shares.end(), 1.0 / static_cast<double>(k));
  }
  const double top = *std::max_element(a.shares.begin(), a.shares.end());
  std::vector<std::string> leaders;
  for (std::size_t i = 0; i < k; ++i) {
    if (a.shares[i] == top) leaders.push_back(a.specialists[i]);
  }
  std::sort(leaders.begin(), leaders.end());
  a.dominant = leaders.front();
  a.dominant_tie = leaders.size() > 1;
  return a;
}

std::string_view to_string(Agreement a) {
  switch (a) {
    case Agreement::agree_low:
      return "agree_low";
    case Agreement::agree_high:
      return "agree_high";
    case Agreement::conflict:
      return "conflict";
  }
  return "conflict";
}

Agreement agreement_label(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("agreement_label: no probabilities");
  std::size_t high = 0;
  for (double p : probs) high += to_logit(p) > 0.0 ? 1 : 0;
  if (high == 0) return Agreement::agree_low;
  if (high == probs.size()) return Agreement::agree_high;
  return Agreement::conflict;
}

Agreement agreement_label(double p_first, double p_second) {
  const double p[] = {p_first, p_second};
  return agreement_label(p);
}

double share_percent(double share) { return std::floor(share * 1000.0 + 0.5) / 10.0; }

namespace {

std::string sig3(double v) { return fmt::format("{:.3g}", v); }

std::string signed_term(double v) {
  return v < 0.0 ? fmt::format(" - {}", sig3(-v)) : fmt::format(" + {}", sig3(v));
}

}  // namespace

CaseExplanation explain_case(const StackingModel& model, const PredictionRecord& record, double threshold) {
  CaseExplanation ex;
  ex.episode_id = record.episode_id;
  ex.threshold = threshold;
  std::vector<double> vote_values;
  for (const auto& name : model.specialists()) {
    if (!record.has(name)) {
      throw std::invalid_argument(fmt::format("episode '{}' lacks specialist '{}'", record.episode_id, name));
    }
    ex.votes.emplace_back(name, record.prob(name));
    vote_values.push_back(record.prob(name));
  }
  ex.attribution = modality_contributions(model, record.probs);
  const auto z = model.standardizer.transform(record.probs);
  ex.intercept = model.intercept;
  for (std::size_t i = 0; i < z.size(); ++i) {
    ex.terms.push_back({model.specialists()[i], model.weights[i], z[i], ex.attribution.contributions[i]});
  }
  ex.ensemble_logit = predict_meta_logit(model, record.probs);
  ex.ensemble_probability = logistic(ex.ensemble_logit);
  ex.predicted_class = ex.ensemble_probability >= threshold ? 1 : 0;
  ex.agreement = agreement_label(vote_values);

  std::string symbolic = "logit(p) = b_eff";
  std::string substituted = sig3(ex.intercept);
  std::string summed = sig3(ex.intercept);
  for (const auto& t : ex.terms) {
    symbolic += fmt::format(" + w_{0}*z_{0}", t.specialist);
    substituted += fmt::format(" + ({})*({})", sig3(t.weight), sig3(t.z));
    summed += signed_term(t.contribution);
  }
  ex.equation = fmt::format("{} = {} = {} = {}", symbolic, substituted, summed, sig3(ex.ensemble_logit));
  return ex;
}

std::string render_text(const CaseExplanation& ex) {
  std::string out = fmt::format("Episode {}\n", ex.episode_id);
  out += "Branch votes:";
  for (const auto& [name, p] : ex.votes) out += fmt::format(" {}={:.3f}", name, p);
  out += '\n';
  out += fmt::format("Ensemble: p={:.3f} class={} (threshold {})\n", ex.ensemble_probability, ex.predicted_class,
                     ex.threshold);
  out += fmt::format("Decision: {}\n", ex.equation);
  const auto& a = ex.attribution;
  std::size_t dom = 0;
  for (std::size_t i = 0; i < a.specialists.size(); ++i) {
    if (a.specialists[i] == a.dominant) dom = i;
  }
  const double c = a.contributions.empty() ? 0.0 : a.contributions[dom];
  out += fmt::format("Dominant modality: {} ({:.1f}% share, pulls risk {}){}\n", a.dominant, share_percent(a.shares[dom]),
                     c > 0.0 ? "up" : (c < 0.0 ? "down" : "nowhere"), a.dominant_tie ? " [tie]" : "");
  out += "Shares:";
  for (std::size_t i = 0; i < a.specialists.size(); ++i) {
    out += fmt::format(" {}={:.1f}%", a.specialists[i], share_percent(a.shares[i]));
  }
  out += '\n';
  out += fmt::format("Agreement: {}\n", to_string(ex.agreement));
  return out;
}

}  // namespace latefusion
