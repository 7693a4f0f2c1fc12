#include "latefusion/logistic_solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "latefusion/logit.hpp"

namespace latefusion {

namespace {

void check_inputs(const DesignMatrix& x, std::span<const int> labels) {
  if (x.cols == 0) throw std::invalid_argument("logistic fit: no features");
  if (x.values.size() % x.cols != 0) throw std::invalid_argument("logistic fit: ragged design matrix");
  if (x.rows() != labels.size()) {
    throw std::invalid_argument(
        fmt::format("logistic fit: {} rows but {} labels", x.rows(), labels.size()));
  }
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("logistic fit: labels must be 0/1");
    pos += static_cast<std::size_t>(y);
  }
  if (pos == 0 || pos == labels.size()) throw std::invalid_argument("logistic fit: labels contain a single class");
  for (double v : x.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("logistic fit: non-finite feature");
  }
}

double linear_predictor(const DesignMatrix& x, std::size_t r, double intercept, std::span<const double> slopes) {
  double eta = intercept;
  for (std::size_t c = 0; c < x.cols; ++c) eta += slopes[c] * x.at(r, c);
  return eta;
}

}  // namespace

double log_loss_term(double eta, int y) {
  const double softplus = eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
  return softplus - (y ? eta : 0.0);
}

double mean_log_loss(const DesignMatrix& x, std::span<const int> labels, double intercept,
                     std::span<const double> slopes) {
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) total += log_loss_term(linear_predictor(x, r, intercept, slopes), labels[r]);
  return total / static_cast<double>(x.rows());
}

std::vector<double> logistic_gradient(const DesignMatrix& x, std::span<const int> labels, double intercept,
                                      std::span<const double> slopes, double l2) {
  const std::size_t n = x.rows();
  std::vector<double> g(x.cols + 1, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double resid = logistic(linear_predictor(x, r, intercept, slopes)) - labels[r];
    g[0] += resid;
    for (std::size_t c = 0; c < x.cols; ++c) g[c + 1] += resid * x.at(r, c);
  }
  for (auto& v : g) v /= static_cast<double>(n);
  for (std::size_t c = 0; c < x.cols; ++c) g[c + 1] += l2 * slopes[c];
  return g;
}

LogisticFit fit_logistic(const DesignMatrix& x, std::span<const int> labels, const LogisticOptions& options,
                         std::span<const double> fixed_slopes) {
  check_inputs(x, labels);
  if (options.l2 < 0.0) throw std::invalid_argument("logistic fit: l2 must be >= 0");
  const std::size_t n = x.rows();
  const std::size_t k = x.cols;
  if (options.intercept_only && fixed_slopes.size() != k) {
    throw std::invalid_argument("logistic fit: intercept-only mode needs one fixed slope per feature");
  }
  if (!options.intercept_only && n < k + 1) {
    throw std::invalid_argument(fmt::format("logistic fit: need at least {} rows, got {}", k + 1, n));
  }

  // Unknowns: [intercept, slopes...] or just [intercept].
  const std::size_t dim = options.intercept_only ? 1 : k + 1;
  LogisticFit fit;
  fit.slopes.assign(k, 0.0);
  if (options.intercept_only) fit.slopes.assign(fixed_slopes.begin(), fixed_slopes.end());
  const double l2 = options.intercept_only ? 0.0 : options.l2;
  if (!options.start.empty()) {
    if (options.start.size() != dim) throw std::invalid_argument(fmt::format("logistic fit: start needs {} values", dim));
    fit.intercept = options.start[0];
    for (std::size_t c = 1; c < dim; ++c) fit.slopes[c - 1] = options.start[c];
  }

  // One pass yields the penalized objective and the fitted probabilities, so
  // each Newton step costs one exp and one log1p per row.
  const auto evaluate = [&](double b, std::span<const double> w, std::vector<double>& probs) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double eta = linear_predictor(x, r, b, w);
      const double e = std::exp(-std::abs(eta));
      probs[r] = eta >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      total += std::max(eta, 0.0) + std::log1p(e) - (labels[r] ? eta : 0.0);
    }
    double pen = 0.0;
    for (double v : w) pen += v * v;
    return total / static_cast<double>(n) + 0.5 * l2 * pen;
  };
  std::vector<double> probs(n);
  std::vector<double> next_probs(n);
  double objective = evaluate(fit.intercept, fit.slopes, probs);
  Eigen::VectorXd grad(dim);
  Eigen::MatrixXd hess(dim, dim);
  int iter = 0;
  for (;; ++iter) {
    // Plain accumulators: a per-row Eigen rank update is several times slower
    // for the one- and two-feature fits that dominate bootstrap runs.
    std::vector<double> g(dim, 0.0);
    std::vector<double> h(dim * dim, 0.0);
    std::vector<double> row(dim, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
      const double p = probs[r];
      const double resid = p - labels[r];
      const double weight = p * (1.0 - p);
      for (std::size_t c = 1; c < dim; ++c) row[c] = x.at(r, c - 1);
      for (std::size_t a = 0; a < dim; ++a) {
        g[a] += resid * row[a];
        const double wa = weight * row[a];
        for (std::size_t b = 0; b <= a; ++b) h[a * dim + b] += wa * row[b];
      }
    }
    for (std::size_t a = 0; a < dim; ++a) {
      const auto ai = static_cast<Eigen::Index>(a);
      grad(ai) = g[a];
      for (std::size_t b = 0; b <= a; ++b) {
        const auto bi = static_cast<Eigen::Index>(b);
        hess(ai, bi) = hess(bi, ai) = h[a * dim + b];
      }
    }
    grad /= static_cast<double>(n);
    hess /= static_cast<double>(n);
    for (std::size_t c = 1; c < dim; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      grad(ci) += l2 * fit.slopes[c - 1];
      hess(ci, ci) += l2;
    }
    fit.diagnostics.gradient_norm = grad.norm();
    if (fit.diagnostics.gradient_norm <= options.tol) {
      fit.diagnostics.converged = true;
      break;
    }
    if (iter >= options.max_iter) break;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.solve(-grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(grad) >= 0.0) {
      // Hessian numerically singular (saturated fit): fall back to a gradient step.
      step = -grad;
    }

    // Backtracking on the penalized objective. Close to the optimum the
    // objective change drops below double resolution, so the pure Newton step
    // is taken without a test.
    const bool local = fit.diagnostics.gradient_norm < 1e-6;
    double t = 1.0;
    double next_b = 0.0;
    std::vector<double> next_w(fit.slopes);
    double next_obj = objective;
    bool accepted = false;
    for (int half = 0; half < 60; ++half, t *= 0.5) {
      next_b = fit.intercept + t * step(0);
      for (std::size_t c = 1; c < dim; ++c) next_w[c - 1] = fit.slopes[c - 1] + t * step(static_cast<Eigen::Index>(c));
      next_obj = evaluate(next_b, next_w, next_probs);
      if (local || next_obj <= objective + 1e-4 * t * step.dot(grad)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    fit.intercept = next_b;
    fit.slopes = std::move(next_w);
    objective = next_obj;
    probs.swap(next_probs);

    if (!options.intercept_only && l2 == 0.0) {
      double norm = 0.0;
      for (double w : fit.slopes) norm += w * w;
      if (std::sqrt(norm) > options.separation_guard) {
        throw SeparationError(fmt::format(
            "logistic fit: perfect separation suspected (||w|| = {:.3g} > {} after {} iterations); set l2 > 0",
            std::sqrt(norm), options.separation_guard, iter + 1));
      }
    }
  }
  fit.diagnostics.iterations = iter;
  fit.diagnostics.objective = objective;
  fit.diagnostics.log_loss = mean_log_loss(x, labels, fit.intercept, fit.slopes);
  return fit;
}

}  // namespace latefusion
