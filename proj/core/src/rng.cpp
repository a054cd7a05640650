#include "gnelin/rng.hpp"

namespace gnelin {

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return r % bound;
}

}  // namespace gnelin
