#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gnelin {

enum class Errc {
  DisconnectedGraph,
  NonSymmetric,
  InvalidWeights,
  NotPSD,
  RankThresholdAmbiguous,
  DimensionMismatch,
  InvalidGame,
  NotStronglyMonotone,
  SingularBlock,
  NonFinite,
  InconsistentKKT,
  RangeSpaceMiss,
  WeightNotPD,
  DegenerateSigma,
  MaxIterExceeded,
  MultiplierInconsistent,
  InsufficientData,
  EmptySeries,
  InvalidConfig,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind of error, not its message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace gnelin
