#pragma once

#include <cstdint>

namespace latefusion {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014). Bijective 64-bit mixer.
std::uint64_t splitmix64_mix(std::uint64_t z);

/// Deterministic random stream keyed by (seed, stream id[, substream id]).
///
/// The state is a SplitMix64 counter whose starting point is derived by
/// mixing the key words, so stream k of a given seed is the same no matter
/// which thread draws it or in which order streams are consumed. Normals use
/// the Box-Muller transform so output is identical across standard libraries.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, bound), bound > 0 (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound);
  double normal();

 private:
  std::uint64_t state_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace latefusion
