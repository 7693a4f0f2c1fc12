#pragma once

// Slow reference implementations used only by the tests. Each one follows the
// textbook definition directly so it shares no code path with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <vector>

namespace oracle {

/// Twice the concordance count over all positive/negative pairs, and the pair count.
struct PairCount {
  std::uint64_t twice_concordant = 0;
  std::uint64_t pairs = 0;
};

inline PairCount pair_count(std::span<const double> s, std::span<const int> y) {
  PairCount pc;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pc.pairs;
      if (s[i] > s[j]) pc.twice_concordant += 2;
      if (s[i] == s[j]) pc.twice_concordant += 1;
    }
  }
  return pc;
}

inline double auroc(std::span<const double> s, std::span<const int> y) {
  const auto pc = pair_count(s, y);
  return static_cast<double>(pc.twice_concordant) / static_cast<double>(2 * pc.pairs);
}

/// Sweep every distinct score as a threshold (predict positive when s >= t),
/// highest first, and sum recall increments times precision.
inline double auprc(std::span<const double> s, std::span<const int> y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  double n_pos = 0;
  for (int v : y) n_pos += v;
  double prev_recall = 0.0;
  double ap = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp) += 1;
    }
    const double recall = tp / n_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

/// Weighted least-squares non-decreasing fit through the min-max formula
/// fit_k = max_{i<=k} min_{j>=k} mean(i..j).  O(n^3).
inline std::vector<double> isotonic(std::span<const double> v, std::span<const double> w) {
  const std::size_t n = v.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= k; ++i) {
      double inner = std::numeric_limits<double>::infinity();
      for (std::size_t j = k; j < n; ++j) {
        double sw = 0, swv = 0;
        for (std::size_t t = i; t <= j; ++t) {
          sw += w[t];
          swv += w[t] * v[t];
        }
        inner = std::min(inner, swv / sw);
      }
      best = std::max(best, inner);
    }
    out[k] = best;
  }
  return out;
}

/// Plain gradient descent on mean log-loss of y ~ logistic(b + a*x), many small
/// steps from zero. Returns {b, a}.
inline std::pair<double, double> logistic_1d_gd(std::span<const double> x, std::span<const int> y,
                                                int iterations = 200000, double lr = 0.5) {
  double a = 0.0, b = 0.0;
  const double n = static_cast<double>(x.size());
  for (int it = 0; it < iterations; ++it) {
    double ga = 0, gb = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(b + a * x[i])));
      gb += p - y[i];
      ga += (p - y[i]) * x[i];
    }
    a -= lr * ga / n;
    b -= lr * gb / n;
  }
  return {b, a};
}

/// Central finite-difference gradient.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

/// Phi(gap / (sigma * sqrt 2)) via erfc, independent of the library's normal_cdf.
inline double binormal_auc(double gap, double sigma) {
  return 0.5 * std::erfc(-gap / (sigma * std::sqrt(2.0)) / std::sqrt(2.0));
}

}  // namespace oracle
