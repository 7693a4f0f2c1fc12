#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "latefusion/commands.hpp"

namespace lf = latefusion;
using lf::cli::RunConfig;

namespace {

struct Flags {
  std::string input, model, calibrators, config, out = ".", episode, format = "jsonl", meta = "logreg";
  std::string vitals = "ts", notes = "cn", fallback = "single_branch";
  std::vector<std::string> specialists, candidates;
  std::uint64_t seed = 0;
  std::size_t bootstrap_n = 1000;
  std::size_t threads = 0;
  double threshold = 0.5;
  std::size_t ece_bins = 20;
  double l2 = 0.0;
  bool drop_incomplete = false;
};

RunConfig to_config(const Flags& f, bool seed_given) {
  RunConfig cfg;
  cfg.input = f.input;
  cfg.model = f.model;
  cfg.calibrators = f.calibrators;
  cfg.config = f.config;
  cfg.out = f.out;
  cfg.specialists = f.specialists;
  cfg.meta = lf::parse_meta_kind(f.meta);
  if (!f.candidates.empty()) {
    cfg.calibration_candidates.clear();
    for (const auto& c : f.candidates) cfg.calibration_candidates.push_back(lf::parse_calibrator_kind(c));
  }
  cfg.bootstrap.n_resamples = f.bootstrap_n;
  cfg.bootstrap.seed = f.seed;
  cfg.bootstrap.threads = f.threads;
  cfg.threshold = f.threshold;
  cfg.ece_bins = f.ece_bins;
  cfg.l2 = f.l2;
  cfg.roles = {f.vitals, f.notes};
  if (f.fallback == "impute") {
    cfg.fallback_mode = lf::FallbackMode::impute;
  } else if (f.fallback != "single_branch") {
    throw lf::cli::CommandError(fmt::format("unknown fallback mode '{}'", f.fallback));
  }
  cfg.episode_id = f.episode;
  if (f.format == "csv") {
    cfg.format = lf::FileFormat::csv;
  } else if (f.format != "jsonl") {
    throw lf::cli::CommandError(fmt::format("unknown format '{}'", f.format));
  }
  cfg.drop_incomplete = f.drop_incomplete;
  if (seed_given) cfg.simulate_seed = f.seed;
  return cfg;
}

std::string report_table(const std::vector<lf::MetricReport>& reports) {
  std::ostringstream os;
  os << fmt::format("{:<16} {:<22} {:>9} {:>9} {:>9}\n", "model", "metric", "point", "ci_low", "ci_high");
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      os << fmt::format("{:<16} {:<22} {:>9.4f} {:>9.4f} {:>9.4f}\n", r.model, row.name, row.ci.point, row.ci.lower,
                        row.ci.upper);
    }
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Late-fusion stacking for ICU mortality predictions"};
  app.set_version_flag("--version", lf::cli::artifact_version());
  app.require_subcommand(1);
  Flags f;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--out", f.out, "Output directory")->capture_default_str();
    sub->add_option("--specialists", f.specialists, "Specialist names, in model order");
    sub->add_flag("--drop-incomplete", f.drop_incomplete, "Skip records lacking any specialist");
    sub->add_option("--vitals", f.vitals, "Name of the time-series specialist")->capture_default_str();
    sub->add_option("--notes", f.notes, "Name of the clinical-notes specialist")->capture_default_str();
  };
  const auto eval_opts = [&](CLI::App* sub) {
    sub->add_option("--seed", f.seed, "Bootstrap seed")->capture_default_str();
    sub->add_option("--bootstrap-n", f.bootstrap_n, "Bootstrap resamples")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--threads", f.threads, "Bootstrap worker threads (0 = hardware)");
    sub->add_option("--threshold", f.threshold, "Decision threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sub->add_option("--ece-bins", f.ece_bins, "Equal-frequency reliability bins")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--calibrators", f.calibrators, "calibrators.json from the calibrate command")->check(CLI::ExistingFile);
    sub->add_option("--candidates", f.candidates, "Calibration methods to try (platt, temperature, isotonic)");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic two-branch cohort");
  simulate->add_option("--config", f.config, "Synthetic cohort JSON")->required()->check(CLI::ExistingFile);
  auto* sim_seed = simulate->add_option("--seed", f.seed, "Override the config seed");
  simulate->add_option("--out", f.out, "Output directory")->capture_default_str();
  simulate->add_option("--format", f.format, "jsonl or csv")->capture_default_str();

  auto* fuse = app.add_subcommand("fuse", "Fit the stacking meta-learner on the validation split");
  fuse->add_option("--input", f.input, "Prediction file (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
  fuse->add_option("--meta", f.meta, "logreg or avg")->capture_default_str();
  fuse->add_option("--l2", f.l2, "L2 penalty on meta weights")->capture_default_str()->check(CLI::NonNegativeNumber);
  common(fuse);

  auto* calibrate = app.add_subcommand("calibrate", "Select per-specialist calibrators on the validation split");
  calibrate->add_option("--input", f.input, "Prediction file")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--ece-bins", f.ece_bins, "Equal-frequency bins for selection")->capture_default_str();
  calibrate->add_option("--candidates", f.candidates, "Calibration methods to try");
  common(calibrate);

  auto* evaluate = app.add_subcommand("evaluate", "Test-split metrics with bootstrap intervals");
  evaluate->add_option("--input", f.input, "Prediction file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--model", f.model, "model.json from fuse")->required()->check(CLI::ExistingFile);
  eval_opts(evaluate);
  common(evaluate);

  auto* explain = app.add_subcommand("explain", "Case-level explanation of one test episode");
  explain->add_option("--input", f.input, "Prediction file")->required()->check(CLI::ExistingFile);
  explain->add_option("--model", f.model, "model.json from fuse")->required()->check(CLI::ExistingFile);
  explain->add_option("--episode", f.episode, "Episode id")->required();
  explain->add_option("--threshold", f.threshold, "Decision threshold")->capture_default_str();
  explain->add_option("--out", f.out, "Output directory")->capture_default_str();

  auto* robustness = app.add_subcommand("robustness", "Metrics with one modality withheld");
  robustness->add_option("--input", f.input, "Prediction file")->required()->check(CLI::ExistingFile);
  robustness->add_option("--model", f.model, "model.json from fuse")->required()->check(CLI::ExistingFile);
  robustness->add_option("--fallback", f.fallback, "single_branch or impute")->capture_default_str();
  eval_opts(robustness);
  common(robustness);

  auto* agreement = app.add_subcommand("agreement", "Cross-modal agreement and modality share tables");
  agreement->add_option("--input", f.input, "Prediction file")->required()->check(CLI::ExistingFile);
  agreement->add_option("--model", f.model, "model.json from fuse")->required()->check(CLI::ExistingFile);
  common(agreement);

  auto* saliency = app.add_subcommand("saliency", "Post-process time-series or token attributions");
  saliency->add_option("--config", f.config, "Attribution JSON")->required()->check(CLI::ExistingFile);
  saliency->add_option("--out", f.out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = to_config(f, sim_seed->count() > 0);
    if (simulate->parsed()) {
      lf::cli::cmd_simulate(cfg);
      std::cout << "wrote " << (cfg.out / (cfg.format == lf::FileFormat::csv ? "predictions.csv" : "predictions.jsonl")).string()
                << '\n';
    } else if (fuse->parsed()) {
      const auto model = lf::cli::cmd_fuse(cfg);
      std::cout << fmt::format("meta={} intercept={:.6f}", lf::to_string(model.kind), model.intercept);
      for (std::size_t i = 0; i < model.weights.size(); ++i) {
        std::cout << fmt::format(" w_{}={:.6f}", model.specialists()[i], model.weights[i]);
      }
      std::cout << '\n';
    } else if (calibrate->parsed()) {
      for (const auto& [name, sel] : lf::cli::cmd_calibrate(cfg)) {
        std::cout << fmt::format("{}: {}{}\n", name, lf::to_string(sel.chosen.kind), sel.tie ? " (tie)" : "");
      }
    } else if (evaluate->parsed()) {
      std::cout << report_table(lf::cli::cmd_evaluate(cfg));
    } else if (explain->parsed()) {
      std::cout << lf::render_text(lf::cli::cmd_explain(cfg));
    } else if (robustness->parsed()) {
      std::cout << report_table(lf::cli::cmd_robustness(cfg));
    } else if (agreement->parsed()) {
      lf::cli::cmd_agreement(cfg);
      std::cout << "wrote agreement_counts.csv, logit_scatter.csv, modality_shares.csv\n";
    } else if (saliency->parsed()) {
      lf::cli::cmd_saliency(cfg);
      std::cout << "wrote saliency_report.json, saliency_report.txt\n";
    }
  } catch (const lf::PredictionFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& d : e.diagnostics()) std::cerr << "  " << d << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
