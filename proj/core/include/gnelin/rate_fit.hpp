#pragma once

#include <optional>
#include <vector>

namespace gnelin {

struct RateFit {
  double rate = 0.0;       // per-iteration geometric factor exp(slope)
  double r_squared = 0.0;  // of the log-linear least-squares fit
  double tail_fraction = 0.0;
  int points = 0;          // samples used in the fit
};

/// Least-squares fit of log(d_k) against k over the last `tail_fraction` of
/// the usable samples. Samples that are missing, nonpositive or below
/// 1e3 * eps * d_0 (the float floor) are dropped first. Throws
/// InsufficientData with fewer than 20 usable tail points.
RateFit fit_rate(const std::vector<std::optional<double>>& distances,
                 double tail_fraction);

RateFit fit_rate(const std::vector<double>& distances, double tail_fraction);

}  // namespace gnelin
