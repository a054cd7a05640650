#include "gnelin/rate_fit.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gnelin/error.hpp"

namespace gnelin {

RateFit fit_rate(const std::vector<std::optional<double>>& distances,
                 double tail_fraction) {
  require(tail_fraction > 0.0 && tail_fraction <= 1.0, Errc::InvalidConfig,
          "tail fraction must lie in (0, 1]");
  std::optional<double> first;
  for (const auto& d : distances)
    if (d && *d > 0.0 && std::isfinite(*d)) {
      first = d;
      break;
    }
  require(first.has_value(), Errc::InsufficientData, "no positive distances");
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * *first;

  std::vector<double> ks;
  std::vector<double> logs;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    const auto& d = distances[k];
    if (!d || !std::isfinite(*d) || *d <= floor) continue;
    ks.push_back(static_cast<double>(k));
    logs.push_back(std::log(*d));
  }
  const auto usable = ks.size();
  const auto tail = static_cast<std::size_t>(
      std::floor(tail_fraction * static_cast<double>(usable)));
  require(tail >= 20, Errc::InsufficientData,
          "only " + std::to_string(tail) + " usable tail points (need 20)");

  const std::size_t start = usable - tail;
  double mk = 0.0;
  double ml = 0.0;
  for (std::size_t t = start; t < usable; ++t) {
    mk += ks[t];
    ml += logs[t];
  }
  mk /= static_cast<double>(tail);
  ml /= static_cast<double>(tail);
  double skk = 0.0;
  double skl = 0.0;
  double sll = 0.0;
  for (std::size_t t = start; t < usable; ++t) {
    skk += (ks[t] - mk) * (ks[t] - mk);
    skl += (ks[t] - mk) * (logs[t] - ml);
    sll += (logs[t] - ml) * (logs[t] - ml);
  }
  RateFit fit;
  const double slope = skl / skk;
  fit.rate = std::exp(slope);
  // A perfectly flat series is fitted exactly.
  fit.r_squared = sll > 0.0 ? (skl * skl) / (skk * sll) : 1.0;
  fit.tail_fraction = tail_fraction;
  fit.points = static_cast<int>(tail);
  return fit;
}

RateFit fit_rate(const std::vector<double>& distances, double tail_fraction) {
  std::vector<std::optional<double>> wrapped(distances.begin(), distances.end());
  return fit_rate(wrapped, tail_fraction);
}

}  // namespace gnelin
