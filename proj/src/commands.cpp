#include "latefusion/commands.hpp"

#include <algorithm>
#include <iostream>

#include <fmt/format.h>

#include "latefusion/attribution.hpp"
#include "latefusion/csv.hpp"
#include "latefusion/metrics.hpp"
#include "latefusion/token_report.hpp"

namespace latefusion::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

std::vector<PredictionRecord> load_records(const RunConfig& cfg) {
  if (cfg.input.empty()) throw CommandError("--input is required");
  auto result = load_predictions(cfg.input);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  return std::move(result.records);
}

std::vector<std::string> resolve_specialists(const RunConfig& cfg, const std::vector<PredictionRecord>& records) {
  if (!cfg.specialists.empty()) return cfg.specialists;
  const auto names = specialist_names(records);
  const auto has = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
  if (has(cfg.roles.vitals) && has(cfg.roles.notes)) return {cfg.roles.vitals, cfg.roles.notes};
  return names;
}

std::vector<PredictionRecord> with_all(const std::vector<PredictionRecord>& records,
                                       const std::vector<std::string>& specialists) {
  std::vector<PredictionRecord> out;
  for (const auto& r : records) {
    if (std::all_of(specialists.begin(), specialists.end(), [&](const std::string& s) { return r.has(s); })) {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<PredictionRecord> split_of(const RunConfig& cfg, const std::vector<PredictionRecord>& records, Split split,
                                       const std::vector<std::string>& specialists) {
  auto out = filter_split(records, split);
  if (cfg.drop_incomplete) out = with_all(out, specialists);
  return out;
}

StackingModel load_model(const RunConfig& cfg) {
  if (cfg.model.empty()) throw CommandError("--model is required");
  return io::stacking_model_from_json(io::read_json_file(cfg.model));
}

void ensure_out(const RunConfig& cfg) { fs::create_directories(cfg.out); }

std::vector<int> labels_of(const std::vector<PredictionRecord>& records) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.label);
  return y;
}

std::vector<double> probs_of(const std::vector<PredictionRecord>& records, const std::string& name) {
  std::vector<double> p;
  p.reserve(records.size());
  for (const auto& r : records) p.push_back(r.prob(name));
  return p;
}

std::vector<double> meta_of(const StackingModel& model, const std::vector<PredictionRecord>& records) {
  std::vector<double> p;
  p.reserve(records.size());
  for (const auto& r : records) p.push_back(predict_meta(model, r.probs));
  return p;
}

std::vector<PredictionRecord> carrying(const std::vector<PredictionRecord>& records, const std::string& name) {
  return with_all(records, {name});
}

Json selection_json(const CalibratorSelection& sel) {
  Json j;
  j["chosen"] = to_string(sel.chosen.kind);
  j["tie"] = sel.tie;
  j["raw_validation_ece"] = sel.raw_validation_ece;
  Json cands = Json::array();
  for (const auto& c : sel.candidates) {
    Json o{{"kind", to_string(c.kind)}, {"fitted", c.calibrator.has_value()}};
    o["validation_ece"] = c.calibrator ? Json(c.validation_ece) : Json(nullptr);
    if (c.calibrator) o["calibrator"] = io::to_json(*c.calibrator);
    if (!c.error.empty()) o["error"] = c.error;
    cands.push_back(std::move(o));
  }
  j["candidates"] = cands;
  return j;
}

std::map<std::string, CalibratorSelection> fit_branch_calibrators(const RunConfig& cfg,
                                                                  const std::vector<PredictionRecord>& records,
                                                                  const std::vector<std::string>& specialists) {
  const auto validation = filter_split(records, Split::validation);
  if (validation.empty()) throw CommandError("no validation records");
  std::map<std::string, CalibratorSelection> out;
  for (const auto& s : specialists) {
    const auto rows = carrying(validation, s);
    if (rows.empty()) throw CommandError(fmt::format("no validation records carry '{}'", s));
    out.emplace(s, select_calibrator(probs_of(rows, s), labels_of(rows), cfg.calibration_candidates, cfg.ece_bins));
  }
  return out;
}

std::map<std::string, Calibrator> branch_calibrators(const RunConfig& cfg, const std::vector<PredictionRecord>& records,
                                                     const std::vector<std::string>& specialists) {
  std::map<std::string, Calibrator> out;
  if (!cfg.calibrators.empty()) {
    const auto j = io::read_json_file(cfg.calibrators);
    if (!j.contains("calibrators")) throw CommandError(fmt::format("{}: missing 'calibrators'", cfg.calibrators.string()));
    for (const auto& [name, c] : j.at("calibrators").items()) out.emplace(name, io::calibrator_from_json(c));
    return out;
  }
  for (auto& [name, sel] : fit_branch_calibrators(cfg, records, specialists)) out.emplace(name, sel.chosen);
  return out;
}

}  // namespace

std::string artifact_version() { return LATEFUSION_VERSION; }

Json RunConfig::to_json(const std::string& command) const {
  Json j;
  j["command"] = command;
  j["input"] = input.string();
  j["model"] = model.string();
  j["calibrators"] = calibrators.string();
  j["config"] = config.string();
  j["specialists"] = specialists;
  j["meta"] = latefusion::to_string(meta);
  Json cands = Json::array();
  for (auto k : calibration_candidates) cands.push_back(latefusion::to_string(k));
  j["calibration_candidates"] = cands;
  j["bootstrap"] = {{"n_resamples", bootstrap.n_resamples}, {"seed", bootstrap.seed}, {"level", bootstrap.level}};
  j["threshold"] = threshold;
  j["ece_bins"] = ece_bins;
  j["l2"] = l2;
  j["roles"] = {{"vitals", roles.vitals}, {"notes", roles.notes}};
  j["fallback_mode"] = fallback_mode == FallbackMode::impute ? "impute" : "single_branch";
  j["episode_id"] = episode_id;
  j["drop_incomplete"] = drop_incomplete;
  return j;
}

void write_csv_with_sidecar(const RunConfig& cfg, const std::string& command, const std::string& name,
                            const std::string& content) {
  io::write_text_file(cfg.out / name, content);
  const auto config = cfg.to_json(command);
  Json meta;
  meta["file"] = name;
  meta["artifact"] = "latefusion";
  meta["version"] = artifact_version();
  meta["command"] = command;
  meta["config_hash"] = io::fnv1a_hex(config.dump());
  meta["config"] = config;
  io::write_json_file(cfg.out / (name + ".meta.json"), meta);
}

void cmd_simulate(const RunConfig& cfg) {
  if (cfg.config.empty()) throw CommandError("simulate needs --config <synthetic config JSON>");
  auto sc = io::synthetic_config_from_json(io::read_json_file(cfg.config));
  if (cfg.simulate_seed) sc.seed = *cfg.simulate_seed;
  const auto records = generate_synthetic_cohort(sc);
  ensure_out(cfg);
  const std::string name = cfg.format == FileFormat::csv ? "predictions.csv" : "predictions.jsonl";
  if (cfg.format == FileFormat::csv) {
    write_csv_with_sidecar(cfg, "simulate", name, serialize_predictions(records, FileFormat::csv));
  } else {
    save_predictions(cfg.out / name, records, FileFormat::jsonl);
  }
  const auto summary = cohort_summary(records);
  Json j;
  j["config"] = io::to_json(sc);
  j["total"] = summary.total;
  for (const auto& [sp, ss] : summary.splits) {
    j["splits"][std::string(to_string(sp))] = {{"count", ss.count}, {"positives", ss.positives}, {"prevalence", ss.prevalence}};
  }
  for (const auto& b : sc.branches) j["theoretical_auroc"][b.name] = binormal_auroc(b.mu1 - b.mu0, sc.sigma);
  io::write_json_file(cfg.out / "cohort_summary.json", j);
}

StackingModel cmd_fuse(const RunConfig& cfg) {
  const auto records = load_records(cfg);
  const auto specialists = resolve_specialists(cfg, records);
  auto validation = filter_split(records, Split::validation);
  if (validation.empty()) throw CommandError("no validation records");
  const auto complete = with_all(validation, specialists);
  const std::size_t skipped = validation.size() - complete.size();
  if (complete.empty()) throw CommandError("no validation records carry every specialist");
  MetaOptions opts;
  opts.l2 = cfg.l2;
  StackingModel model;
  try {
    model = fit_stacker(complete, specialists, cfg.meta, opts);
  } catch (const std::invalid_argument& e) {
    throw CommandError(fmt::format("fuse: {}", e.what()));
  } catch (const SeparationError& e) {
    throw CommandError(fmt::format("fuse: {}", e.what()));
  }
  ensure_out(cfg);
  io::write_json_file(cfg.out / "model.json", io::to_json(model));

  Json report;
  report["command"] = "fuse";
  report["version"] = artifact_version();
  report["config_hash"] = io::fnv1a_hex(cfg.to_json("fuse").dump());
  report["validation_records"] = complete.size();
  report["validation_skipped_incomplete"] = skipped;
  report["model"] = io::to_json(model);
  if (model.kind == MetaKind::logreg) {
    const auto gw = global_weights(model);
    for (std::size_t i = 0; i < specialists.size(); ++i) report["global_weights"][specialists[i]] = gw[i];
  }
  const auto p = meta_of(model, complete);
  const auto y = labels_of(complete);
  report["validation_metrics"] = {{"auroc", auroc(p, y)},
                                  {"auprc", auprc(p, y)},
                                  {"brier", brier(p, y)},
                                  {"log_loss", model.diagnostics.log_loss}};
  if (!model.diagnostics.converged && model.kind == MetaKind::logreg) {
    std::cerr << "warning: meta-learner did not converge; partial fit written\n";
  }
  io::write_json_file(cfg.out / "fit_report.json", report);
  return model;
}

std::map<std::string, CalibratorSelection> cmd_calibrate(const RunConfig& cfg) {
  const auto records = load_records(cfg);
  const auto specialists = resolve_specialists(cfg, records);
  const auto sel = fit_branch_calibrators(cfg, records, specialists);
  ensure_out(cfg);
  Json doc;
  doc["format_version"] = io::kFormatVersion;
  Json cals;
  Json selection;
  std::string rows = csv::format_row({"specialist", "method", "validation_ece", "raw_validation_ece", "chosen", "tie"});
  for (const auto& [name, s] : sel) {
    cals[name] = io::to_json(s.chosen);
    selection[name] = selection_json(s);
    for (const auto& c : s.candidates) {
      rows += csv::format_row({name, std::string(to_string(c.kind)),
                               c.calibrator ? fmt::format("{}", c.validation_ece) : std::string(),
                               fmt::format("{}", s.raw_validation_ece), c.kind == s.chosen.kind ? "1" : "0",
                               s.tie ? "1" : "0"});
    }
  }
  doc["calibrators"] = cals;
  doc["selection"] = selection;
  io::write_json_file(cfg.out / "calibrators.json", doc);
  write_csv_with_sidecar(cfg, "calibrate", "calibration_selection.csv", rows);
  return sel;
}

std::vector<MetricReport> cmd_evaluate(const RunConfig& cfg) {
  const auto records = load_records(cfg);
  const auto model = load_model(cfg);
  const auto& specialists = model.specialists();
  const auto test = split_of(cfg, records, Split::test, specialists);
  if (test.empty()) throw CommandError("no test records");
  const auto cals = branch_calibrators(cfg, records, specialists);

  std::vector<MetricReport> reports;
  std::string reliability = io::reliability_csv_header();
  Json rel_json;
  const auto evaluate_panel = [&](const std::string& panel, const std::vector<double>& raw, const std::vector<double>& cal,
                                  const std::vector<int>& y) {
    reports.push_back(evaluate_scores(panel, raw, y, cfg.threshold, cfg.ece_bins, cfg.bootstrap));
    reports.push_back(evaluate_scores(panel + "_cal", cal, y, cfg.threshold, cfg.ece_bins, cfg.bootstrap));
    const auto pre = reliability_bins(raw, y, cfg.ece_bins);
    const auto post = reliability_bins(cal, y, cfg.ece_bins);
    reliability += io::reliability_csv_rows(panel, "pre", pre);
    reliability += io::reliability_csv_rows(panel, "post", post);
    rel_json[panel] = {{"pre", io::to_json(pre)}, {"post", io::to_json(post)}};
  };

  Json calibration_info;
  for (const auto& s : specialists) {
    const auto rows = carrying(test, s);
    if (rows.empty()) continue;
    const auto raw = probs_of(rows, s);
    const auto it = cals.find(s);
    if (it == cals.end()) throw CommandError(fmt::format("no calibrator for '{}'", s));
    evaluate_panel(s, raw, apply_calibrator(it->second, raw), labels_of(rows));
    calibration_info[s] = io::to_json(it->second);
  }

  const auto complete = with_all(test, specialists);
  if (complete.empty()) throw CommandError("no test records carry every specialist");
  const auto ens = meta_of(model, complete);
  const auto val = with_all(filter_split(records, Split::validation), specialists);
  if (val.empty()) throw CommandError("no validation records");
  const auto ens_sel = select_calibrator(meta_of(model, val), labels_of(val), cfg.calibration_candidates, cfg.ece_bins);
  evaluate_panel("ensemble", ens, apply_calibrator(ens_sel.chosen, ens), labels_of(complete));
  calibration_info["ensemble"] = io::to_json(ens_sel.chosen);

  ensure_out(cfg);
  std::string csv_text = io::metric_csv_header();
  Json j;
  j["version"] = artifact_version();
  j["bootstrap"] = {{"n_resamples", cfg.bootstrap.n_resamples}, {"seed", cfg.bootstrap.seed}, {"level", cfg.bootstrap.level}};
  j["threshold"] = cfg.threshold;
  j["ece_bins"] = cfg.ece_bins;
  j["test_records"] = test.size();
  j["calibrators"] = calibration_info;
  for (const auto& r : reports) {
    csv_text += io::metric_csv_rows(r);
    j["reports"].push_back(io::to_json(r));
  }
  write_csv_with_sidecar(cfg, "evaluate", "metrics.csv", csv_text);
  io::write_json_file(cfg.out / "metrics.json", j);
  write_csv_with_sidecar(cfg, "evaluate", "reliability.csv", reliability);
  io::write_json_file(cfg.out / "reliability.json", rel_json);
  return reports;
}

CaseExplanation cmd_explain(const RunConfig& cfg) {
  const auto records = load_records(cfg);
  const auto model = load_model(cfg);
  if (model.kind != MetaKind::logreg) throw CommandError("explain needs a logreg model");
  if (cfg.episode_id.empty()) throw CommandError("explain needs --episode");
  const auto test = filter_split(records, Split::test);
  const auto it = std::find_if(test.begin(), test.end(), [&](const auto& r) { return r.episode_id == cfg.episode_id; });
  if (it == test.end()) throw CommandError(fmt::format("unknown episode '{}' in test split", cfg.episode_id));
  CaseExplanation ex;
  try {
    ex = explain_case(model, *it, cfg.threshold);
  } catch (const std::exception& e) {
    throw CommandError(e.what());
  }
  ensure_out(cfg);
  io::write_text_file(cfg.out / fmt::format("explain_{}.txt", cfg.episode_id), render_text(ex));
  io::write_json_file(cfg.out / fmt::format("explain_{}.json", cfg.episode_id), io::to_json(ex));
  return ex;
}

std::vector<MetricReport> cmd_robustness(const RunConfig& cfg) {
  const auto records = load_records(cfg);
  const auto model = load_model(cfg);
  std::vector<std::string> needed = model.specialists();
  for (const auto& r : {cfg.roles.vitals, cfg.roles.notes}) {
    if (std::find(needed.begin(), needed.end(), r) == needed.end()) needed.push_back(r);
  }
  const auto test = with_all(filter_split(records, Split::test), needed);
  if (test.empty()) throw CommandError("no test records carry both modalities");
  const auto cals = branch_calibrators(cfg, records, {cfg.roles.vitals, cfg.roles.notes});
  const auto y = labels_of(test);

  std::vector<MetricReport> reports;
  std::string csv_text = io::metric_csv_header();
  Json j;
  j["version"] = artifact_version();
  j["bootstrap"] = {{"n_resamples", cfg.bootstrap.n_resamples}, {"seed", cfg.bootstrap.seed}, {"level", cfg.bootstrap.level}};
  j["fallback_mode"] = cfg.fallback_mode == FallbackMode::impute ? "impute" : "single_branch";
  j["test_records"] = test.size();
  for (auto scenario : kAllScenarios) {
    std::vector<double> p;
    p.reserve(test.size());
    for (auto rec : test) {
      if (scenario == FallbackScenario::notes_absent) rec.probs.erase(cfg.roles.notes);
      if (scenario == FallbackScenario::vitals_absent) rec.probs.erase(cfg.roles.vitals);
      p.push_back(fallback_predict(scenario, model, cals, rec, cfg.roles, cfg.fallback_mode));
    }
    auto report = evaluate_scores(std::string(to_string(scenario)), p, y, cfg.threshold, cfg.ece_bins, cfg.bootstrap);
    csv_text += io::metric_csv_rows(report);
    j["scenarios"].push_back(io::to_json(report));
    reports.push_back(std::move(report));
  }
  ensure_out(cfg);
  write_csv_with_sidecar(cfg, "robustness", "robustness.csv", csv_text);
  io::write_json_file(cfg.out / "robustness.json", j);
  return reports;
}

void cmd_agreement(const RunConfig& cfg) {
  const auto records = load_records(cfg);
  const auto model = load_model(cfg);
  if (model.kind != MetaKind::logreg) throw CommandError("agreement needs a logreg model");
  const auto& v = cfg.roles.vitals;
  const auto& n = cfg.roles.notes;
  auto needed = model.specialists();
  for (const auto& r : {v, n}) {
    if (std::find(needed.begin(), needed.end(), r) == needed.end()) throw CommandError(fmt::format("model lacks specialist '{}'", r));
  }
  const auto test = with_all(filter_split(records, Split::test), needed);
  if (test.empty()) throw CommandError("no test records carry both modalities");
  const auto& names = model.specialists();
  const auto idx_of = [&](const std::string& s) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), s) - names.begin());
  };
  const std::size_t iv = idx_of(v);
  const std::size_t in = idx_of(n);

  struct Tally {
    std::size_t count = 0;
    std::size_t positives = 0;
    double meta_sum = 0.0;
  };
  std::map<Agreement, Tally> tally{{Agreement::agree_low, {}}, {Agreement::conflict, {}}, {Agreement::agree_high, {}}};
  std::string scatter = csv::format_row({"episode_id", "label", fmt::format("logit_{}", v), fmt::format("logit_{}", n),
                                         fmt::format("z_{}", v), fmt::format("z_{}", n), "p_meta", "agreement"});
  std::string shares = csv::format_row({"episode_id", fmt::format("share_{}", n), fmt::format("share_{}", v), "dominant"});
  for (const auto& rec : test) {
    const double pm = predict_meta(model, rec.probs);
    const auto cat = agreement_label(rec.prob(v), rec.prob(n));
    auto& t = tally[cat];
    ++t.count;
    t.positives += static_cast<std::size_t>(rec.label);
    t.meta_sum += pm;
    const auto z = model.standardizer.transform(rec.probs);
    scatter += csv::format_row({rec.episode_id, std::to_string(rec.label), fmt::format("{}", to_logit(rec.prob(v))),
                                fmt::format("{}", to_logit(rec.prob(n))), fmt::format("{}", z[iv]),
                                fmt::format("{}", z[in]), fmt::format("{}", pm), std::string(to_string(cat))});
    // Shares restricted to the two modalities so that share_v = 1 - share_n.
    const double cv = std::abs(model.weights[iv] * z[iv]);
    const double cn = std::abs(model.weights[in] * z[in]);
    const double total = cv + cn;
    const double sn = total > 0.0 ? cn / total : 0.5;
    const double sv = 1.0 - sn;
    shares += csv::format_row({rec.episode_id, fmt::format("{}", sn), fmt::format("{}", sv),
                               sv > sn ? v : (sn > sv ? n : std::min(v, n))});
  }
  std::string counts = csv::format_row({"category", "count", "prevalence", "pos_rate", "meta_prob"});
  for (const auto& [cat, t] : tally) {
    const double c = static_cast<double>(t.count);
    counts += csv::format_row({std::string(to_string(cat)), std::to_string(t.count),
                               fmt::format("{}", c / static_cast<double>(test.size())),
                               t.count ? fmt::format("{}", static_cast<double>(t.positives) / c) : std::string(),
                               t.count ? fmt::format("{}", t.meta_sum / c) : std::string()});
  }
  ensure_out(cfg);
  write_csv_with_sidecar(cfg, "agreement", "agreement_counts.csv", counts);
  write_csv_with_sidecar(cfg, "agreement", "logit_scatter.csv", scatter);
  write_csv_with_sidecar(cfg, "agreement", "modality_shares.csv", shares);
}

io::Json cmd_saliency(const RunConfig& cfg) {
  if (cfg.config.empty()) throw CommandError("saliency needs --config <attribution JSON>");
  const auto doc = io::read_json_file(cfg.config);
  const std::string kind = doc.value("kind", "");
  Json out;
  out["kind"] = kind;
  std::string text;
  if (kind == "matrix") {
    auto m = io::attribution_matrix_from_json(doc);
    if (doc.contains("scorer")) {
      // IG through a built-in scorer: observed grid is the input, baseline defaults to zeros.
      const auto scorer = io::scorer_from_json(doc.at("scorer"));
      IGConfig ig;
      ig.steps = doc.value("steps", kTimeSeriesIgSteps);
      if (doc.contains("baseline")) ig.baseline = doc.at("baseline").get<std::vector<double>>();
      if (m.observed.empty()) throw CommandError("matrix IG needs 'observed' values as the model input");
      m.saliency = integrated_gradients(*scorer, m.observed, ig);
      out["completeness_gap"] = completeness_gap(*scorer, m.observed, ig, m.saliency);
      out["steps"] = ig.steps;
    }
    m.validate();
    const auto k = doc.value("top_k", std::size_t{10});
    std::vector<Driver> cells;
    for (std::size_t h = 0; h < m.hours; ++h) {
      for (std::size_t v = 0; v < m.cols(); ++v) cells.push_back({fmt::format("{}@h{}", m.variables[v], h), m.at(h, v)});
    }
    const auto top = top_k_drivers(cells, k);
    const auto windows = saliency_windows(m, doc.value("min_window", std::size_t{2}));
    const auto mask = heatmap_mask(m, doc.value("top_frac", 0.10));
    const auto ranking = rank_variables_by_mean_abs(m);
    const auto drivers_json = [](const std::vector<Driver>& ds) {
      Json arr = Json::array();
      for (const auto& d : ds) arr.push_back({{"name", d.name}, {"value", d.value}});
      return arr;
    };
    out["saliency"] = m.saliency;
    out["top_positive"] = drivers_json(top.positive);
    out["top_negative"] = drivers_json(top.negative);
    out["variables_by_mean_abs"] = drivers_json(ranking);
    out["windows"] = io::to_json(windows);
    out["heatmap_mask"] = mask;
    text += "Top risk-increasing cells\n";
    for (const auto& d : top.positive) text += fmt::format("  {:<32} {:+.5f}\n", d.name, d.value);
    text += "Top risk-reducing cells\n";
    for (const auto& d : top.negative) text += fmt::format("  {:<32} {:+.5f}\n", d.name, d.value);
    text += "Variables by mean |saliency|\n";
    for (const auto& d : ranking) text += fmt::format("  {:<32} {:.5f}\n", d.name, d.value);
    text += "Windows\n";
    for (const auto& w : windows) {
      text += fmt::format("  {:<20} hours {:>2}-{:<2} {} peak h{} {:+.5f}", w.variable, w.start_hour, w.end_hour,
                          w.sign > 0 ? "+" : "-", w.peak_hour, w.peak_saliency);
      if (w.observed_at_peak) text += fmt::format(" (observed {})", *w.observed_at_peak);
      text += '\n';
    }
  } else if (kind == "tokens") {
    const std::string source = doc.value("source_text", "");
    auto ta = io::token_attribution_from_json(doc);
    if (doc.contains("scorer")) {
      // IG on token embeddings against a PAD-embedding baseline; a token's
      // saliency is the sum over its embedding coordinates.
      const auto scorer = io::scorer_from_json(doc.at("scorer"));
      const auto dim = doc.at("embedding_dim").get<std::size_t>();
      const auto emb = doc.at("embeddings").get<std::vector<double>>();
      const auto pad = doc.at("pad_embedding").get<std::vector<double>>();
      if (dim == 0 || emb.size() != dim * ta.tokens.size() || pad.size() != dim) {
        throw CommandError("token IG: embeddings must be tokens x embedding_dim and pad_embedding embedding_dim long");
      }
      IGConfig ig;
      ig.steps = doc.value("steps", kTokenIgSteps);
      for (std::size_t t = 0; t < ta.tokens.size(); ++t) ig.baseline.insert(ig.baseline.end(), pad.begin(), pad.end());
      const auto attr = integrated_gradients(*scorer, emb, ig);
      for (std::size_t t = 0; t < ta.tokens.size(); ++t) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += attr[t * dim + d];
        ta.tokens[t].saliency = s;
      }
      out["completeness_gap"] = completeness_gap(*scorer, emb, ig, attr);
      out["steps"] = ig.steps;
    }
    TokenReportOptions opts;
    if (doc.contains("options")) {
      const auto& o = doc.at("options");
      opts.negators = o.value("negators", opts.negators);
      opts.stopwords = o.value("stopwords", opts.stopwords);
      opts.whitelist = o.value("whitelist", opts.whitelist);
      opts.subword_marker = o.value("subword_marker", opts.subword_marker);
      opts.sign_frac = o.value("sign_frac", opts.sign_frac);
      opts.snippet_cap = o.value("snippet_cap", opts.snippet_cap);
    }
    const auto report = token_report(ta, source, opts);
    out["token_saliency"] = io::to_json(ta);
    out["report"] = io::to_json(report);
    text = render_text(report);
  } else {
    throw CommandError("saliency input needs \"kind\": \"matrix\" or \"tokens\"");
  }
  ensure_out(cfg);
  io::write_json_file(cfg.out / "saliency_report.json", out);
  io::write_text_file(cfg.out / "saliency_report.txt", text);
  return out;
}

}  // namespace latefusion::cli
