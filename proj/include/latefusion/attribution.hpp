#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace latefusion {

/// A model with a sigmoid output: value(x) = logistic(score(x)).
///
/// Implementations provide the pre-logistic score and its gradient; the
/// probability and its gradient follow by the chain rule.
class DifferentiableScorer {
 public:
  virtual ~DifferentiableScorer() = default;

  virtual std::size_t dimension() const = 0;
  virtual double score(std::span<const double> x) const = 0;
  virtual std::vector<double> score_gradient(std::span<const double> x) const = 0;

  double value(std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;
};

class LinearScorer final : public DifferentiableScorer {
 public:
  LinearScorer(std::vector<double> weights, double bias);

  std::size_t dimension() const override { return weights_.size(); }
  double score(std::span<const double> x) const override;
  std::vector<double> score_gradient(std::span<const double> x) const override;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> weights_;
  double bias_;
};

/// score(x) = w2 . tanh(W1 x + b1) + b2, W1 stored row-major (hidden x input).
class MlpScorer final : public DifferentiableScorer {
 public:
  MlpScorer(std::size_t inputs, std::size_t hidden, std::vector<double> w1, std::vector<double> b1,
            std::vector<double> w2, double b2);

  std::size_t dimension() const override { return inputs_; }
  std::size_t hidden() const { return hidden_; }
  double score(std::span<const double> x) const override;
  std::vector<double> score_gradient(std::span<const double> x) const override;

  const std::vector<double>& w1() const { return w1_; }
  const std::vector<double>& b1() const { return b1_; }
  const std::vector<double>& w2() const { return w2_; }
  double b2() const { return b2_; }

 private:
  std::vector<double> hidden_activations(std::span<const double> x) const;

  std::size_t inputs_;
  std::size_t hidden_;
  std::vector<double> w1_, b1_, w2_;
  double b2_;
};

LinearScorer builtin_linear_scorer(std::vector<double> weights, double bias);
MlpScorer builtin_mlp_scorer(std::size_t inputs, std::size_t hidden, std::vector<double> w1, std::vector<double> b1,
                             std::vector<double> w2, double b2);

enum class IgTarget { probability, score };
enum class RiemannRule { right, midpoint };

inline constexpr int kTimeSeriesIgSteps = 20;
inline constexpr int kTokenIgSteps = 25;

struct IGConfig {
  int steps = kTimeSeriesIgSteps;
  std::vector<double> baseline;  // empty = all-zero baseline of the input's dimension
  IgTarget target = IgTarget::probability;
  RiemannRule rule = RiemannRule::right;
};

/// IG_i = (x_i - x0_i) * (1/S) sum_{s=1..S} d target(x0 + (s/S)(x - x0)) / dx_i
/// (right-endpoint rule; midpoint uses (s - 1/2)/S).
std::vector<double> integrated_gradients(const DifferentiableScorer& scorer, std::span<const double> x,
                                         const IGConfig& cfg = {});

/// |sum_i IG_i - (target(x) - target(x0))|.
double completeness_gap(const DifferentiableScorer& scorer, std::span<const double> x, const IGConfig& cfg,
                        std::span<const double> attributions);

/// Relative error between analytic and central-difference gradients of value().
double gradient_check(const DifferentiableScorer& scorer, std::span<const double> x, double h = 1e-5);

// ---------------------------------------------------------------------------

/// Columns of a one-hot (or single numeric) variable. For one-hot groups,
/// `categories[j]` labels columns[j].
struct FeatureGroup {
  std::string name;
  std::vector<std::size_t> columns;
  std::vector<std::string> categories;
};

struct GroupAttribution {
  std::string name;
  double attribution = 0.0;
  std::string decoded;  // category whose column is hot in the observation, if any
};

/// Per-group sums. Groups must partition [0, attr.size()); `observed`, when
/// nonempty, decodes the active category of each one-hot group.
std::vector<GroupAttribution> aggregate_onehot(std::span<const double> attr, const std::vector<FeatureGroup>& groups,
                                               std::span<const double> observed = {});

struct Driver {
  std::string name;
  double value = 0.0;
};

struct TopDrivers {
  std::vector<Driver> positive;  // descending
  std::vector<Driver> negative;  // ascending (most negative first)
};

/// Zeros belong to neither list; ties keep input order.
TopDrivers top_k_drivers(const std::vector<Driver>& items, std::size_t k);

inline constexpr std::size_t kGridHours = 48;

/// Signed saliency over an hours x variables grid, row-major by hour.
struct AttributionMatrix {
  std::size_t hours = kGridHours;
  std::vector<std::string> variables;
  std::vector<double> saliency;
  std::vector<double> observed;  // same shape, may be empty

  std::size_t cols() const { return variables.size(); }
  double at(std::size_t hour, std::size_t var) const { return saliency[hour * cols() + var]; }
  /// Throws std::invalid_argument on shape mismatch.
  void validate() const;
};

struct SaliencyWindow {
  std::string variable;
  std::size_t start_hour = 0;
  std::size_t end_hour = 0;  // inclusive
  int sign = 0;              // +1 or -1
  std::size_t peak_hour = 0;
  double peak_saliency = 0.0;
  std::optional<double> observed_at_peak;
};

/// Maximal same-sign runs of nonzero saliency per variable, length >= min_len.
std::vector<SaliencyWindow> saliency_windows(const AttributionMatrix& m, std::size_t min_len = 2);

/// Keeps the ceil(top_frac * cells) largest |saliency| cells (plus any cells
/// tied with the smallest kept magnitude). Row-major like the matrix.
std::vector<bool> heatmap_mask(const AttributionMatrix& m, double top_frac = 0.10);

/// Variables ranked by mean |saliency| over hours, descending.
std::vector<Driver> rank_variables_by_mean_abs(const AttributionMatrix& m);

}  // namespace latefusion
