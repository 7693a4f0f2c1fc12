#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace latefusion {

struct LogisticOptions {
  double l2 = 0.0;  // lambda on the slopes; the intercept is never penalized
  double tol = 1e-9;  // gradient 2-norm at which Newton stops
  int max_iter = 100;
  /// With l2 == 0, a slope vector whose 2-norm exceeds this is treated as
  /// perfect separation.
  double separation_guard = 35.0;
  /// Fit the intercept only, slopes fixed at `fixed_slopes` (offset model).
  bool intercept_only = false;
  /// Starting point [intercept, slopes...] ([intercept] in intercept-only
  /// mode); empty starts from zero.
  std::vector<double> start;
};

struct FitDiagnostics {
  int iterations = 0;
  double log_loss = 0.0;  // mean log-loss at the returned parameters (no penalty)
  double objective = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

struct LogisticFit {
  double intercept = 0.0;
  std::vector<double> slopes;
  FitDiagnostics diagnostics;
};

class SeparationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major design matrix with `cols` features per row (no intercept column).
struct DesignMatrix {
  std::span<const double> values;
  std::size_t cols = 0;

  std::size_t rows() const { return cols ? values.size() / cols : 0; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Minimizes mean log-loss + (l2/2)*||slopes||^2 by damped Newton (IRLS).
///
/// Throws std::invalid_argument for shape problems or single-class labels and
/// SeparationError when the unpenalized slopes diverge. Hitting max_iter is not
/// an error: the partial fit comes back with diagnostics.converged == false.
LogisticFit fit_logistic(const DesignMatrix& x, std::span<const int> labels, const LogisticOptions& options = {},
                         std::span<const double> fixed_slopes = {});

/// Gradient of the penalized objective at (intercept, slopes); index 0 is the intercept.
std::vector<double> logistic_gradient(const DesignMatrix& x, std::span<const int> labels, double intercept,
                                      std::span<const double> slopes, double l2);

double mean_log_loss(const DesignMatrix& x, std::span<const int> labels, double intercept,
                     std::span<const double> slopes);

/// log(1 + exp(eta)) - y*eta without overflow.
double log_loss_term(double eta, int y);

}  // namespace latefusion
