#include "gnelin/error.hpp"

namespace gnelin {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DisconnectedGraph: return "DisconnectedGraph";
    case Errc::NonSymmetric: return "NonSymmetric";
    case Errc::InvalidWeights: return "InvalidWeights";
    case Errc::NotPSD: return "NotPSD";
    case Errc::RankThresholdAmbiguous: return "RankThresholdAmbiguous";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidGame: return "InvalidGame";
    case Errc::NotStronglyMonotone: return "NotStronglyMonotone";
    case Errc::SingularBlock: return "SingularBlock";
    case Errc::NonFinite: return "NonFinite";
    case Errc::InconsistentKKT: return "InconsistentKKT";
    case Errc::RangeSpaceMiss: return "RangeSpaceMiss";
    case Errc::WeightNotPD: return "WeightNotPD";
    case Errc::DegenerateSigma: return "DegenerateSigma";
    case Errc::MaxIterExceeded: return "MaxIterExceeded";
    case Errc::MultiplierInconsistent: return "MultiplierInconsistent";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::EmptySeries: return "EmptySeries";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace gnelin
