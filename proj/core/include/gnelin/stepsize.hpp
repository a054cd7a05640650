#pragma once

#include <Eigen/Dense>
#include <array>
#include <nlohmann/json.hpp>

#include "gnelin/game.hpp"
#include "gnelin/topology.hpp"

namespace gnelin {

/// Problem constants entering the linear-convergence certificate.
struct TheoryConstants {
  double mu = 0.0;
  double L = 0.0;
  double sigma = 0.0;
  int N = 0;
  double lam_max_PiTPi = 0.0;  // lambda_max(Pi^T Pi) = max_i lambda_max(A_i^T A_i)
  double lam_min_PiPiT = 0.0;  // lambda_min(Pi Pi^T) = min_i lambda_min(A_i A_i^T)
  double lam_max_B = 0.0;
  double min_nonzero_sv_B = 0.0;
};

TheoryConstants make_theory_constants(const AffineGame& game,
                                      const Topology& topology);

/// A bound together with the candidate terms it is the minimum of, so a
/// report can say which one binds.
struct Bound {
  double value = 0.0;
  std::array<double, 3> terms{};
  int count = 0;
  int binding() const;
};

Eigen::Matrix2d m_alpha(const TheoryConstants& k, double alpha);

/// Spectral radius of m_alpha via the closed-form 2x2 symmetric eigenvalues.
double rho_m_alpha(const TheoryConstants& k, double alpha);

/// min{(1 - s^2)/(9 s L), sqrt(1 - s^2)/(sqrt(3) L), mu (1 - s)/(6 N L^2)};
/// the first term is +inf when sigma = 0.
Bound alpha_bound(const TheoryConstants& k);

/// Throws DegenerateSigma when sigma = 0: the sigma*L term then admits no
/// positive beta.
Bound beta_bound(const TheoryConstants& k, double alpha);

Bound gamma_bound(const TheoryConstants& k, double alpha, double beta);

struct BetaGammaBounds {
  Bound beta;
  Bound gamma;  // evaluated at the supplied beta
};

BetaGammaBounds beta_gamma_bounds(const TheoryConstants& k, double alpha,
                                  double beta);

struct Contraction {
  double a = 0.0;
  std::array<double, 3> terms{};  // rho(M_alpha), 1 - a b lmin, 1 - svB^2 g
  bool certified = false;
};

/// Computed for any positive stepsizes; `certified` says whether the triple
/// lies inside the region where the Lyapunov function provably contracts.
Contraction contraction_factor(const TheoryConstants& k, double alpha,
                               double beta, double gamma);

/// Full certificate for a stepsize triple, as printed by `gnelin certify`.
nlohmann::json certification_report(const TheoryConstants& k, double alpha,
                                     double beta, double gamma);

nlohmann::json to_json(const TheoryConstants& k);

}  // namespace gnelin
