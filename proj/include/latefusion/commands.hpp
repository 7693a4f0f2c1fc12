#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "latefusion/bootstrap.hpp"
#include "latefusion/calibration.hpp"
#include "latefusion/data_model.hpp"
#include "latefusion/fusion.hpp"
#include "latefusion/io.hpp"

namespace latefusion::cli {

/// Everything a subcommand needs. Paths that a command does not use are ignored.
struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path model;
  std::filesystem::path calibrators;  // optional; fitted on validation when empty
  std::filesystem::path config;       // simulate / saliency input document
  std::filesystem::path out = ".";
  std::vector<std::string> specialists;  // empty: vitals+notes roles if present, else all in file order
  MetaKind meta = MetaKind::logreg;
  std::vector<CalibratorKind> calibration_candidates = kAllCalibrators;
  BootstrapOptions bootstrap;
  double threshold = 0.5;
  std::size_t ece_bins = 20;
  double l2 = 0.0;
  ModalityRoles roles;
  FallbackMode fallback_mode = FallbackMode::single_branch;
  std::string episode_id;
  FileFormat format = FileFormat::jsonl;
  bool drop_incomplete = false;
  std::optional<std::uint64_t> simulate_seed;  // overrides the seed in the simulate config

  /// Canonical JSON of the fields that influence results (output path excluded).
  io::Json to_json(const std::string& command) const;
};

/// Thrown for user-facing failures; main() prints the message and exits nonzero.
class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void cmd_simulate(const RunConfig& cfg);
StackingModel cmd_fuse(const RunConfig& cfg);
std::map<std::string, CalibratorSelection> cmd_calibrate(const RunConfig& cfg);
std::vector<MetricReport> cmd_evaluate(const RunConfig& cfg);
CaseExplanation cmd_explain(const RunConfig& cfg);
std::vector<MetricReport> cmd_robustness(const RunConfig& cfg);
void cmd_agreement(const RunConfig& cfg);
/// IG post-processing for a matrix or token attribution document (cfg.config).
io::Json cmd_saliency(const RunConfig& cfg);

/// Writes `name` under cfg.out together with `name.meta.json` (command, config hash, version).
void write_csv_with_sidecar(const RunConfig& cfg, const std::string& command, const std::string& name,
                            const std::string& content);

std::string artifact_version();

}  // namespace latefusion::cli
