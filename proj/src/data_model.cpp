#include "latefusion/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "latefusion/csv.hpp"
#include "latefusion/logit.hpp"
#include "latefusion/rng.hpp"

namespace latefusion {

namespace {

constexpr std::string_view kProbPrefix = "p_";

bool is_prob_column(std::string_view key) {
  return key.size() > kProbPrefix.size() && key.starts_with(kProbPrefix);
}

std::string specialist_from_column(std::string_view key) {
  return std::string(key.substr(kProbPrefix.size()));
}

std::string join_first(const std::vector<std::string>& lines, std::size_t limit) {
  std::string out;
  for (std::size_t i = 0; i < lines.size() && i < limit; ++i) {
    if (i) out += "; ";
    out += lines[i];
  }
  if (lines.size() > limit) out += fmt::format("; ... ({} more)", lines.size() - limit);
  return out;
}

void check_probability(double p, const std::string& column) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw std::invalid_argument(fmt::format("probability outside [0,1] in {} ({})", column, p));
  }
}

PredictionRecord record_from_json(const nlohmann::json& row) {
  if (!row.is_object()) throw std::invalid_argument("row is not a JSON object");
  PredictionRecord rec;
  for (const char* key : {"episode_id", "split", "label"}) {
    if (!row.contains(key)) throw std::invalid_argument(fmt::format("missing required field '{}'", key));
  }
  if (!row["episode_id"].is_string()) throw std::invalid_argument("episode_id must be a string");
  rec.episode_id = row["episode_id"].get<std::string>();
  if (!row["split"].is_string()) throw std::invalid_argument("split must be a string");
  rec.split = parse_split(row["split"].get<std::string>());
  const auto& label = row["label"];
  if (!label.is_number_integer()) throw std::invalid_argument("label must be the integer 0 or 1");
  const auto lv = label.get<long long>();
  if (lv != 0 && lv != 1) throw std::invalid_argument(fmt::format("label must be 0 or 1 (got {})", lv));
  rec.label = static_cast<int>(lv);
  for (const auto& [key, value] : row.items()) {
    if (!is_prob_column(key) || value.is_null()) continue;
    if (!value.is_number()) throw std::invalid_argument(fmt::format("{} is not numeric", key));
    const double p = value.get<double>();
    check_probability(p, key);
    rec.probs.emplace(specialist_from_column(key), p);
  }
  return rec;
}

double parse_double_cell(const std::string& cell, const std::string& column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("unparseable number '{}' in {}", cell, column));
  }
  if (used != cell.size()) throw std::invalid_argument(fmt::format("unparseable number '{}' in {}", cell, column));
  return v;
}

struct RowSink {
  LoadResult result;
  std::vector<std::string> errors;
  std::set<std::pair<Split, std::string>> seen;
  const LoadOptions& options;

  void add(std::size_t row, PredictionRecord rec) {
    if (!seen.emplace(rec.split, rec.episode_id).second) {
      errors.push_back(fmt::format("row {}: duplicate episode_id '{}' within split {}", row, rec.episode_id,
                                   to_string(rec.split)));
      return;
    }
    for (const auto& name : options.require_specialists) {
      if (!rec.has(name)) {
        result.warnings.push_back(
            fmt::format("row {}: episode '{}' dropped (missing specialist '{}')", row, rec.episode_id, name));
        return;
      }
    }
    result.records.push_back(std::move(rec));
  }
};

LoadResult parse_jsonl(std::string_view text, const LoadOptions& options) {
  RowSink sink{{}, {}, {}, options};
  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      sink.add(row, record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      sink.errors.push_back(fmt::format("row {}: unparseable row ({})", row, e.what()));
    } catch (const std::exception& e) {
      sink.errors.push_back(fmt::format("row {}: {}", row, e.what()));
    }
  }
  if (!sink.errors.empty()) throw PredictionFileError(std::move(sink.errors));
  return std::move(sink.result);
}

LoadResult parse_csv(std::string_view text, const LoadOptions& options) {
  RowSink sink{{}, {}, {}, options};
  const auto rows = csv::parse(text);
  if (rows.empty()) return std::move(sink.result);
  const auto& header = rows.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  std::vector<std::string> missing;
  for (const char* key : {"episode_id", "split", "label"}) {
    if (!col.contains(key)) missing.push_back(fmt::format("header: missing required column '{}'", key));
  }
  if (!missing.empty()) throw PredictionFileError(std::move(missing));

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const std::size_t row = r + 1;  // 1-based line number, header is row 1
    if (cells.size() == 1 && cells[0].empty()) continue;
    try {
      if (cells.size() != header.size()) {
        throw std::invalid_argument(
            fmt::format("unparseable row: expected {} cells, got {}", header.size(), cells.size()));
      }
      PredictionRecord rec;
      rec.episode_id = cells[col["episode_id"]];
      if (rec.episode_id.empty()) throw std::invalid_argument("missing required field 'episode_id'");
      rec.split = parse_split(cells[col["split"]]);
      const auto& label = cells[col["label"]];
      if (label == "0") {
        rec.label = 0;
      } else if (label == "1") {
        rec.label = 1;
      } else {
        throw std::invalid_argument(fmt::format("label must be 0 or 1 (got '{}')", label));
      }
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (!is_prob_column(header[i]) || cells[i].empty()) continue;
        const double p = parse_double_cell(cells[i], header[i]);
        check_probability(p, header[i]);
        rec.probs.emplace(specialist_from_column(header[i]), p);
      }
      sink.add(row, std::move(rec));
    } catch (const std::exception& e) {
      sink.errors.push_back(fmt::format("row {}: {}", row, e.what()));
    }
  }
  if (!sink.errors.empty()) throw PredictionFileError(std::move(sink.errors));
  return std::move(sink.result);
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "validation") return Split::validation;
  if (text == "test") return Split::test;
  throw std::invalid_argument(fmt::format("unknown split '{}'", text));
}

double PredictionRecord::prob(const std::string& specialist) const {
  const auto it = probs.find(specialist);
  if (it == probs.end()) {
    throw std::out_of_range(fmt::format("episode '{}' has no prediction from '{}'", episode_id, specialist));
  }
  return it->second;
}

PredictionFileError::PredictionFileError(std::vector<std::string> diagnostics)
    : std::runtime_error(fmt::format("{} invalid row(s): {}", diagnostics.size(), join_first(diagnostics, 5))),
      diagnostics_(std::move(diagnostics)) {}

FileFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::csv : FileFormat::jsonl;
}

LoadResult parse_predictions(std::string_view text, FileFormat format, const LoadOptions& options) {
  LoadResult result = format == FileFormat::csv ? parse_csv(text, options) : parse_jsonl(text, options);
  if (result.records.empty()) result.warnings.emplace_back("no prediction records in input");
  return result;
}

LoadResult load_predictions(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open prediction file {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_predictions(buf.str(), options.format.value_or(format_from_path(path)), options);
}

std::string serialize_predictions(const std::vector<PredictionRecord>& records, FileFormat format) {
  std::string out;
  if (format == FileFormat::jsonl) {
    for (const auto& rec : records) {
      nlohmann::ordered_json row;
      row["episode_id"] = rec.episode_id;
      row["split"] = to_string(rec.split);
      row["label"] = rec.label;
      for (const auto& [name, p] : rec.probs) row[std::string(kProbPrefix) + name] = p;
      out += row.dump();
      out += '\n';
    }
    return out;
  }
  const auto names = specialist_names(records);
  std::vector<std::string> header{"episode_id", "split", "label"};
  for (const auto& n : names) header.push_back(std::string(kProbPrefix) + n);
  out += csv::format_row(header);
  for (const auto& rec : records) {
    std::vector<std::string> cells{rec.episode_id, std::string(to_string(rec.split)), std::to_string(rec.label)};
    for (const auto& n : names) {
      const auto it = rec.probs.find(n);
      cells.push_back(it == rec.probs.end() ? std::string() : fmt::format("{}", it->second));
    }
    out += csv::format_row(cells);
  }
  return out;
}

void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records,
                      FileFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << serialize_predictions(records, format);
}

std::vector<PredictionRecord> filter_split(const std::vector<PredictionRecord>& records, Split split) {
  std::vector<PredictionRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [split](const PredictionRecord& r) { return r.split == split; });
  return out;
}

std::vector<std::string> specialist_names(const std::vector<PredictionRecord>& records) {
  std::set<std::string> names;
  for (const auto& r : records) {
    for (const auto& [name, p] : r.probs) names.insert(name);
  }
  return {names.begin(), names.end()};
}

CohortSummary cohort_summary(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw std::invalid_argument("cohort_summary: no records");
  CohortSummary s;
  s.total = records.size();
  for (Split sp : {Split::train, Split::validation, Split::test}) s.splits[sp] = {};
  std::map<std::string, std::size_t> carried;
  for (const auto& r : records) {
    auto& ss = s.splits[r.split];
    ++ss.count;
    ss.positives += static_cast<std::size_t>(r.label);
    for (const auto& [name, p] : r.probs) ++carried[name];
  }
  for (auto& [sp, ss] : s.splits) {
    ss.prevalence = ss.count ? static_cast<double>(ss.positives) / static_cast<double>(ss.count) : 0.0;
  }
  for (const auto& [name, c] : carried) {
    s.coverage[name] = static_cast<double>(c) / static_cast<double>(s.total);
  }
  return s;
}

// ---------------------------------------------------------------------------

void SyntheticConfig::validate() const {
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw std::invalid_argument("synthetic: prevalence must be in (0,1)");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("synthetic: sigma must be > 0");
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("synthetic: rho must be in [-1,1]");
  if (branches.empty()) throw std::invalid_argument("synthetic: at least one branch required");
  if (branches.size() > 2 && rho < 0.0) {
    throw std::invalid_argument("synthetic: negative rho is only supported for two branches");
  }
  std::set<std::string> names;
  for (const auto& b : branches) {
    if (b.name.empty()) throw std::invalid_argument("synthetic: branch name must be nonempty");
    if (!names.insert(b.name).second) throw std::invalid_argument("synthetic: duplicate branch name " + b.name);
    if (!std::isfinite(b.mu0) || !std::isfinite(b.mu1)) throw std::invalid_argument("synthetic: non-finite mean");
  }
}

std::vector<PredictionRecord> generate_synthetic_cohort(const SyntheticConfig& config) {
  config.validate();
  const std::size_t n = config.n_train + config.n_validation + config.n_test;
  const std::size_t k = config.branches.size();
  std::vector<PredictionRecord> out(n);
  std::vector<double> noise(k);
  const double rho = config.rho;
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rng(config.seed, i);
    auto& rec = out[i];
    Split split = Split::test;
    std::size_t local = i - config.n_train - config.n_validation;
    if (i < config.n_train) {
      split = Split::train;
      local = i;
    } else if (i < config.n_train + config.n_validation) {
      split = Split::validation;
      local = i - config.n_train;
    }
    rec.split = split;
    rec.episode_id = fmt::format("{}-{:06d}", to_string(split), local);
    rec.label = rng.uniform() < config.prevalence ? 1 : 0;

    if (k == 2) {
      const double e1 = rng.normal();
      const double e2 = rng.normal();
      noise[0] = e1;
      noise[1] = rho * e1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * e2;
    } else {
      // equicorrelated: shared factor plus independent parts
      const double common = rng.normal();
      for (std::size_t b = 0; b < k; ++b) {
        noise[b] = std::sqrt(rho) * common + std::sqrt(1.0 - rho) * rng.normal();
      }
    }
    for (std::size_t b = 0; b < k; ++b) {
      const auto& br = config.branches[b];
      const double mu = rec.label ? br.mu1 : br.mu0;
      rec.probs.emplace(br.name, logistic(mu + config.sigma * noise[b]));
    }
  }
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double binormal_auroc(double mean_gap, double sigma) { return normal_cdf(mean_gap / (sigma * std::sqrt(2.0))); }

BranchSpec binormal_branch(std::string name, double auroc, double sigma, double prevalence) {
  const double gap = sigma * std::sqrt(2.0) * normal_quantile(auroc);
  const double center = to_logit(prevalence);
  return BranchSpec{std::move(name), center - gap / 2.0, center + gap / 2.0};
}

double calibrated_sigma_for_auroc(double auroc) { return std::sqrt(2.0) * normal_quantile(auroc); }

}  // namespace latefusion
