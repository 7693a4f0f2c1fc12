#include "latefusion/io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "latefusion/csv.hpp"

namespace latefusion::io {

namespace {

void check_version(const Json& j, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(fmt::format("{}: expected a JSON object", what));
  const int v = j.value("format_version", 0);
  if (v < 1 || v > kFormatVersion) {
    throw std::invalid_argument(fmt::format("{}: unsupported format_version {}", what, v));
  }
}

template <typename T>
T required(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw std::invalid_argument(fmt::format("{}: missing '{}'", what, key));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(fmt::format("{}: bad '{}' ({})", what, key, e.what()));
  }
}

std::string num(double v) { return fmt::format("{}", v); }

}  // namespace

Json to_json(const SyntheticConfig& c) {
  Json j;
  j["n_train"] = c.n_train;
  j["n_validation"] = c.n_validation;
  j["n_test"] = c.n_test;
  j["prevalence"] = c.prevalence;
  j["sigma"] = c.sigma;
  j["rho"] = c.rho;
  j["seed"] = c.seed;
  Json branches = Json::array();
  for (const auto& b : c.branches) branches.push_back({{"name", b.name}, {"mu0", b.mu0}, {"mu1", b.mu1}});
  j["branches"] = branches;
  return j;
}

SyntheticConfig synthetic_config_from_json(const Json& j) {
  constexpr const char* what = "synthetic config";
  if (!j.is_object()) throw std::invalid_argument("synthetic config: expected a JSON object");
  SyntheticConfig c;
  c.n_train = j.value("n_train", std::size_t{0});
  c.n_validation = j.value("n_validation", std::size_t{0});
  c.n_test = j.value("n_test", std::size_t{0});
  c.prevalence = required<double>(j, "prevalence", what);
  c.sigma = required<double>(j, "sigma", what);
  c.rho = j.value("rho", 0.0);
  c.seed = j.value("seed", std::uint64_t{0});
  for (const auto& b : required<Json>(j, "branches", what)) {
    BranchSpec spec;
    spec.name = required<std::string>(b, "name", what);
    if (b.contains("auroc")) {
      spec = binormal_branch(spec.name, b.at("auroc").get<double>(), c.sigma, c.prevalence);
    } else {
      spec.mu0 = required<double>(b, "mu0", what);
      spec.mu1 = required<double>(b, "mu1", what);
    }
    c.branches.push_back(std::move(spec));
  }
  c.validate();
  return c;
}

Json to_json(const StackingModel& m) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = to_string(m.kind);
  j["specialists"] = m.standardizer.specialists;
  j["means"] = m.standardizer.means;
  j["sigmas"] = m.standardizer.sigmas;
  j["weights"] = m.weights;
  j["intercept"] = m.intercept;
  j["diagnostics"] = {{"iterations", m.diagnostics.iterations},
                      {"log_loss", m.diagnostics.log_loss},
                      {"gradient_norm", m.diagnostics.gradient_norm},
                      {"converged", m.diagnostics.converged}};
  return j;
}

StackingModel stacking_model_from_json(const Json& j) {
  constexpr const char* what = "model";
  check_version(j, what);
  StackingModel m;
  m.kind = parse_meta_kind(required<std::string>(j, "kind", what));
  m.standardizer.specialists = required<std::vector<std::string>>(j, "specialists", what);
  m.standardizer.means = required<std::vector<double>>(j, "means", what);
  m.standardizer.sigmas = required<std::vector<double>>(j, "sigmas", what);
  m.weights = required<std::vector<double>>(j, "weights", what);
  m.intercept = required<double>(j, "intercept", what);
  const std::size_t k = m.standardizer.specialists.size();
  if (k == 0 || m.standardizer.means.size() != k || m.standardizer.sigmas.size() != k || m.weights.size() != k) {
    throw std::invalid_argument("model: specialists, means, sigmas and weights must have equal nonzero length");
  }
  for (double s : m.standardizer.sigmas) {
    if (!(s > 0.0)) throw std::invalid_argument("model: sigmas must be positive");
  }
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    m.diagnostics.iterations = d.value("iterations", 0);
    m.diagnostics.log_loss = d.value("log_loss", 0.0);
    m.diagnostics.gradient_norm = d.value("gradient_norm", 0.0);
    m.diagnostics.converged = d.value("converged", false);
  }
  return m;
}

Json to_json(const Calibrator& c) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = to_string(c.kind);
  switch (c.kind) {
    case CalibratorKind::platt:
      j["a"] = c.a;
      j["b"] = c.b;
      break;
    case CalibratorKind::temperature:
      j["temperature"] = c.temperature;
      break;
    case CalibratorKind::isotonic:
      j["knots_x"] = c.knots_x;
      j["knots_y"] = c.knots_y;
      break;
  }
  return j;
}

Calibrator calibrator_from_json(const Json& j) {
  constexpr const char* what = "calibrator";
  check_version(j, what);
  Calibrator c;
  c.kind = parse_calibrator_kind(required<std::string>(j, "kind", what));
  switch (c.kind) {
    case CalibratorKind::platt:
      c.a = required<double>(j, "a", what);
      c.b = required<double>(j, "b", what);
      break;
    case CalibratorKind::temperature:
      c.temperature = required<double>(j, "temperature", what);
      break;
    case CalibratorKind::isotonic:
      c.knots_x = required<std::vector<double>>(j, "knots_x", what);
      c.knots_y = required<std::vector<double>>(j, "knots_y", what);
      break;
  }
  c.validate();
  return c;
}

Json to_json(const BootstrapCI& ci) {
  return Json{{"point", ci.point},
              {"mean", ci.mean},
              {"ci_low", ci.lower},
              {"ci_high", ci.upper},
              {"n_resamples", ci.n_resamples}};
}

Json to_json(const MetricReport& r) {
  Json j;
  j["model"] = r.model;
  j["threshold"] = r.threshold;
  j["ece_bins"] = r.ece_bins;
  j["bootstrap"] = {{"n_resamples", r.bootstrap.n_resamples}, {"seed", r.bootstrap.seed}, {"level", r.bootstrap.level}};
  Json metrics;
  for (const auto& row : r.rows) metrics[row.name] = to_json(row.ci);
  j["metrics"] = metrics;
  return j;
}

Json to_json(const std::vector<ReliabilityBin>& bins) {
  Json arr = Json::array();
  for (const auto& b : bins) {
    arr.push_back({{"lower", b.lower},
                   {"upper", b.upper},
                   {"count", b.count},
                   {"mean_predicted", b.mean_predicted},
                   {"event_rate", b.event_rate}});
  }
  return arr;
}

Json to_json(const CaseExplanation& ex) {
  Json j;
  j["episode_id"] = ex.episode_id;
  Json votes;
  for (const auto& [name, p] : ex.votes) votes[name] = p;
  j["votes"] = votes;
  j["ensemble_probability"] = ex.ensemble_probability;
  j["ensemble_logit"] = ex.ensemble_logit;
  j["threshold"] = ex.threshold;
  j["predicted_class"] = ex.predicted_class;
  j["intercept"] = ex.intercept;
  Json terms = Json::array();
  for (const auto& t : ex.terms) {
    terms.push_back({{"specialist", t.specialist}, {"weight", t.weight}, {"z", t.z}, {"contribution", t.contribution}});
  }
  j["terms"] = terms;
  j["equation"] = ex.equation;
  const auto& a = ex.attribution;
  Json shares;
  for (std::size_t i = 0; i < a.specialists.size(); ++i) shares[a.specialists[i]] = a.shares[i];
  j["shares"] = shares;
  j["dominant"] = a.dominant;
  double dom_share = 0.0;
  for (std::size_t i = 0; i < a.specialists.size(); ++i) {
    if (a.specialists[i] == a.dominant) dom_share = a.shares[i];
  }
  j["dominant_share_percent"] = share_percent(dom_share);
  j["dominant_tie"] = a.dominant_tie;
  j["all_contributions_zero"] = a.all_zero;
  j["agreement"] = to_string(ex.agreement);
  return j;
}

Json to_json(const TokenReport& r) {
  const auto terms = [](const std::vector<Term>& ts) {
    Json arr = Json::array();
    for (const auto& t : ts) {
      arr.push_back({{"term", t.text}, {"saliency", t.saliency}, {"begin", t.begin}, {"end", t.end}, {"negation", t.negation}});
    }
    return arr;
  };
  Json j;
  j["risk_increasing"] = terms(r.risk_increasing);
  j["risk_reducing"] = terms(r.risk_reducing);
  j["positive_snippet"] = r.positive_snippet ? Json(*r.positive_snippet) : Json(nullptr);
  j["negative_snippet"] = r.negative_snippet ? Json(*r.negative_snippet) : Json(nullptr);
  return j;
}

Json to_json(const std::vector<SaliencyWindow>& windows) {
  Json arr = Json::array();
  for (const auto& w : windows) {
    Json o{{"variable", w.variable},
           {"start_hour", w.start_hour},
           {"end_hour", w.end_hour},
           {"sign", w.sign},
           {"peak_hour", w.peak_hour},
           {"peak_saliency", w.peak_saliency}};
    o["observed_at_peak"] = w.observed_at_peak ? Json(*w.observed_at_peak) : Json(nullptr);
    arr.push_back(std::move(o));
  }
  return arr;
}

TokenAttribution token_attribution_from_json(const Json& j) {
  constexpr const char* what = "token attribution";
  TokenAttribution ta;
  for (const auto& t : required<Json>(j, "tokens", what)) {
    ta.tokens.push_back(Token{required<std::string>(t, "text", what), required<std::size_t>(t, "begin", what),
                              required<std::size_t>(t, "end", what), required<double>(t, "saliency", what)});
  }
  return ta;
}

Json to_json(const TokenAttribution& ta) {
  Json arr = Json::array();
  for (const auto& t : ta.tokens) {
    arr.push_back({{"text", t.text}, {"begin", t.begin}, {"end", t.end}, {"saliency", t.saliency}});
  }
  return Json{{"tokens", arr}};
}

AttributionMatrix attribution_matrix_from_json(const Json& j) {
  constexpr const char* what = "attribution matrix";
  AttributionMatrix m;
  m.hours = j.value("hours", kGridHours);
  m.variables = required<std::vector<std::string>>(j, "variables", what);
  if (j.contains("saliency")) m.saliency = j.at("saliency").get<std::vector<double>>();
  if (j.contains("observed") && !j.at("observed").is_null()) m.observed = j.at("observed").get<std::vector<double>>();
  return m;
}

Json to_json(const AttributionMatrix& m) {
  Json j{{"hours", m.hours}, {"variables", m.variables}, {"saliency", m.saliency}};
  j["observed"] = m.observed.empty() ? Json(nullptr) : Json(m.observed);
  return j;
}

std::unique_ptr<DifferentiableScorer> scorer_from_json(const Json& j) {
  constexpr const char* what = "scorer";
  const auto type = required<std::string>(j, "type", what);
  if (type == "linear") {
    return std::make_unique<LinearScorer>(required<std::vector<double>>(j, "weights", what),
                                          required<double>(j, "bias", what));
  }
  if (type == "mlp") {
    return std::make_unique<MlpScorer>(required<std::size_t>(j, "inputs", what), required<std::size_t>(j, "hidden", what),
                                       required<std::vector<double>>(j, "w1", what),
                                       required<std::vector<double>>(j, "b1", what),
                                       required<std::vector<double>>(j, "w2", what), required<double>(j, "b2", what));
  }
  throw std::invalid_argument(fmt::format("scorer: unknown type '{}'", type));
}

std::string metric_csv_header() {
  return csv::format_row({"model", "metric", "point", "mean", "ci_low", "ci_high", "n_resamples"});
}

std::string metric_csv_rows(const MetricReport& r) {
  std::string out;
  for (const auto& row : r.rows) {
    out += csv::format_row({r.model, row.name, num(row.ci.point), num(row.ci.mean), num(row.ci.lower),
                            num(row.ci.upper), std::to_string(row.ci.n_resamples)});
  }
  return out;
}

std::string reliability_csv_header() {
  return csv::format_row({"panel", "stage", "bin", "lower", "upper", "count", "mean_predicted", "event_rate"});
}

std::string reliability_csv_rows(const std::string& panel, const std::string& stage,
                                 const std::vector<ReliabilityBin>& bins) {
  std::string out;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto& b = bins[i];
    out += csv::format_row({panel, stage, std::to_string(i), num(b.lower), num(b.upper), std::to_string(b.count),
                            num(b.mean_predicted), num(b.event_rate)});
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(fmt::format("{}: invalid JSON ({})", path.string(), e.what()));
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace latefusion::io
