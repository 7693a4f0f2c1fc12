#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "latefusion/attribution.hpp"
#include "latefusion/bootstrap.hpp"
#include "latefusion/calibration.hpp"
#include "latefusion/data_model.hpp"
#include "latefusion/fusion.hpp"
#include "latefusion/metrics.hpp"
#include "latefusion/token_report.hpp"

namespace latefusion::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

Json to_json(const SyntheticConfig& config);
SyntheticConfig synthetic_config_from_json(const Json& j);

Json to_json(const StackingModel& model);
/// Throws std::invalid_argument on a malformed or newer-version document.
StackingModel stacking_model_from_json(const Json& j);

Json to_json(const Calibrator& cal);
Calibrator calibrator_from_json(const Json& j);

Json to_json(const BootstrapCI& ci);
Json to_json(const MetricReport& report);
Json to_json(const std::vector<ReliabilityBin>& bins);
Json to_json(const CaseExplanation& ex);
Json to_json(const TokenReport& report);
Json to_json(const std::vector<SaliencyWindow>& windows);

/// {"tokens": [{"text", "begin", "end", "saliency"}...]}
TokenAttribution token_attribution_from_json(const Json& j);
Json to_json(const TokenAttribution& ta);

/// {"hours", "variables", "saliency" (row-major), "observed"?}
AttributionMatrix attribution_matrix_from_json(const Json& j);
Json to_json(const AttributionMatrix& m);

/// {"type": "linear", "weights", "bias"} or
/// {"type": "mlp", "inputs", "hidden", "w1", "b1", "w2", "b2"}
std::unique_ptr<DifferentiableScorer> scorer_from_json(const Json& j);

/// Metric CSV: model,metric,point,mean,ci_low,ci_high,n_resamples
std::string metric_csv_header();
std::string metric_csv_rows(const MetricReport& report);

/// Reliability CSV: panel,stage,bin,lower,upper,count,mean_predicted,event_rate
std::string reliability_csv_header();
std::string reliability_csv_rows(const std::string& panel, const std::string& stage,
                                 const std::vector<ReliabilityBin>& bins);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// 64-bit FNV-1a, hex encoded. Used for config hashes in output sidecars.
std::string fnv1a_hex(std::string_view data);

}  // namespace latefusion::io
