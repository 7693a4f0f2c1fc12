#pragma once

#include <cmath>
#include <stdexcept>

namespace latefusion {

/// Probabilities are clamped to [kProbClip, 1 - kProbClip] before taking logits.
inline constexpr double kProbClip = 1e-6;

inline double logistic(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Clipped log-odds ln(p'/(1-p')) with p' = clamp(p, 1e-6, 1 - 1e-6).
inline double to_logit(double p) {
  if (std::isnan(p)) {
    throw std::invalid_argument("to_logit: NaN probability");
  }
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("to_logit: probability outside [0,1]");
  }
  const double q = p < kProbClip ? kProbClip : (p > 1.0 - kProbClip ? 1.0 - kProbClip : p);
  return std::log(q) - std::log1p(-q);
}

}  // namespace latefusion
