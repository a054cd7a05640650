#pragma once

#include <cstdint>
#include <random>

namespace gnelin {

/// Seedable generator with a platform-independent output stream.
///
/// std::mt19937_64 is fully specified by the standard, but the standard
/// distributions are not, so uniform draws are derived from the raw 64-bit
/// words here: the top 53 bits map to [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform01();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace gnelin
