#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace latefusion {

enum class Split { train, validation, test };

std::string_view to_string(Split split);
/// Throws std::invalid_argument on anything other than train/validation/test.
Split parse_split(std::string_view text);

/// One episode: outcome label plus whatever specialist probabilities exist for it.
/// A specialist that did not score the episode is absent from `probs`; 0.0 is a
/// legal probability and never means "missing".
struct PredictionRecord {
  std::string episode_id;
  Split split = Split::test;
  int label = 0;
  std::map<std::string, double> probs;

  bool has(const std::string& specialist) const { return probs.contains(specialist); }
  /// Throws std::out_of_range when the specialist is missing.
  double prob(const std::string& specialist) const;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

enum class FileFormat { jsonl, csv };

/// Picks the format from the extension (.csv -> csv, anything else -> jsonl).
FileFormat format_from_path(const std::filesystem::path& path);

struct LoadOptions {
  std::optional<FileFormat> format;  // inferred from the extension when empty
  /// Records missing any of these specialists are dropped (with a warning)
  /// instead of being kept for fallback scoring. Empty keeps everything.
  std::vector<std::string> require_specialists;
};

struct LoadResult {
  std::vector<PredictionRecord> records;
  std::vector<std::string> warnings;
};

/// Raised when one or more rows fail to parse or violate record invariants.
/// `diagnostics` holds one "row N: ..." line per rejected row.
class PredictionFileError : public std::runtime_error {
 public:
  explicit PredictionFileError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

LoadResult parse_predictions(std::string_view text, FileFormat format, const LoadOptions& options = {});
LoadResult load_predictions(const std::filesystem::path& path, const LoadOptions& options = {});

std::string serialize_predictions(const std::vector<PredictionRecord>& records, FileFormat format);
void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records,
                      FileFormat format);

std::vector<PredictionRecord> filter_split(const std::vector<PredictionRecord>& records, Split split);
/// Sorted union of specialist names across records.
std::vector<std::string> specialist_names(const std::vector<PredictionRecord>& records);

struct SplitSummary {
  std::size_t count = 0;
  std::size_t positives = 0;
  double prevalence = 0.0;
};

struct CohortSummary {
  std::size_t total = 0;
  std::map<Split, SplitSummary> splits;  // every split present, possibly with count 0
  std::map<std::string, double> coverage;
};

CohortSummary cohort_summary(const std::vector<PredictionRecord>& records);

// ---------------------------------------------------------------------------
// Synthetic cohorts

/// Class-conditional logit means of one synthetic specialist.
struct BranchSpec {
  std::string name;
  double mu0 = 0.0;
  double mu1 = 1.0;
};

struct SyntheticConfig {
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  double prevalence = 0.11;
  std::vector<BranchSpec> branches;
  double sigma = 1.0;  // shared within-class logit standard deviation
  double rho = 0.0;    // within-class correlation between branch logits
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Records are numbered train, then validation, then test; record i draws from
/// RandomStream(seed, i) only, so the output is a pure function of the config.
std::vector<PredictionRecord> generate_synthetic_cohort(const SyntheticConfig& config);

/// Standard normal CDF and its inverse.
double normal_cdf(double x);
double normal_quantile(double p);

/// Closed-form AUROC of a binormal score with equal class variances.
double binormal_auroc(double mean_gap, double sigma);

/// Branch whose binormal AUROC equals `auroc` under `sigma`, centred at
/// logit(prevalence). With sigma = sqrt(2) * Phi^-1(auroc) the branch is
/// calibrated: its logit equals the true posterior log-odds.
BranchSpec binormal_branch(std::string name, double auroc, double sigma, double prevalence);
double calibrated_sigma_for_auroc(double auroc);

}  // namespace latefusion
