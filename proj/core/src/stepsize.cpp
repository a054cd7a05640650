#include "gnelin/stepsize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gnelin/error.hpp"

namespace gnelin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Bound make_bound(std::initializer_list<double> terms) {
  Bound b;
  b.value = kInf;
  for (double t : terms) {
    b.terms[static_cast<std::size_t>(b.count++)] = t;
    b.value = std::min(b.value, t);
  }
  return b;
}

nlohmann::json bound_json(const Bound& b) {
  nlohmann::json terms = nlohmann::json::array();
  for (int i = 0; i < b.count; ++i) {
    const double t = b.terms[static_cast<std::size_t>(i)];
    // JSON has no infinity; null marks a vacuous term.
    terms.push_back(std::isfinite(t) ? nlohmann::json(t) : nlohmann::json());
  }
  return {{"max", b.value}, {"terms", terms}, {"binding", b.binding()}};
}

}  // namespace

int Bound::binding() const {
  int best = 0;
  for (int i = 1; i < count; ++i)
    if (terms[static_cast<std::size_t>(i)] < terms[static_cast<std::size_t>(best)])
      best = i;
  return best;
}

TheoryConstants make_theory_constants(const AffineGame& game,
                                      const Topology& topology) {
  const Dims& d = game.dims();
  require(d.players == topology.n, Errc::DimensionMismatch,
          "game and topology disagree on the player count");
  const MonotonicityConstants mono = monotonicity_constants(game);
  TheoryConstants k;
  k.mu = mono.mu;
  k.L = mono.L;
  k.sigma = topology.sigma;
  k.N = d.players;
  k.lam_max_B = topology.lambda_max_B;
  k.min_nonzero_sv_B = topology.min_nonzero_sv_B;
  k.lam_min_PiPiT = kInf;
  for (const auto& Ai : game.constraint().A_blocks) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Ai * Ai.transpose(),
                                               Eigen::EigenvaluesOnly);
    // A_i^T A_i and A_i A_i^T share their nonzero spectrum.
    k.lam_max_PiTPi = std::max(k.lam_max_PiTPi, es.eigenvalues().maxCoeff());
    k.lam_min_PiPiT = std::min(k.lam_min_PiPiT, es.eigenvalues().minCoeff());
  }
  return k;
}

Eigen::Matrix2d m_alpha(const TheoryConstants& k, double alpha) {
  const double s = k.sigma;
  const double L = k.L;
  const double a2 = alpha * alpha;
  Eigen::Matrix2d M;
  M(0, 0) = 1.0 - (k.mu / k.N) * alpha + L * L * a2;
  M(0, 1) = M(1, 0) = (s + 1.0) * L * alpha;
  M(1, 1) = s * s + 3.0 * s * L * alpha + L * L * a2;
  return M;
}

double rho_m_alpha(const TheoryConstants& k, double alpha) {
  const Eigen::Matrix2d M = m_alpha(k, alpha);
  const double tr = M(0, 0) + M(1, 1);
  const double diff = M(0, 0) - M(1, 1);
  // tr^2 - 4 det, written without cancellation.
  const double disc = std::sqrt(diff * diff + 4.0 * M(0, 1) * M(0, 1));
  return std::max(std::abs(0.5 * (tr + disc)), std::abs(0.5 * (tr - disc)));
}

Bound alpha_bound(const TheoryConstants& k) {
  const double s = k.sigma;
  const double L = k.L;
  const double first = s > 0.0 ? (1.0 - s * s) / (9.0 * s * L) : kInf;
  return make_bound({first, std::sqrt(1.0 - s * s) / (std::sqrt(3.0) * L),
                     k.mu * (1.0 - s) / (6.0 * k.N * L * L)});
}

Bound beta_bound(const TheoryConstants& k, double alpha) {
  require(k.sigma > 0.0, Errc::DegenerateSigma,
          "sigma = 0 makes the sigma*L/(2 lambda_max(Pi^T Pi)) bound vanish");
  require(alpha > 0.0, Errc::InvalidConfig, "alpha must be positive");
  return make_bound({k.mu / (2.0 * k.N * k.lam_max_PiTPi),
                     k.sigma * k.L / (2.0 * k.lam_max_PiTPi),
                     1.0 / (alpha * k.lam_min_PiPiT)});
}

Bound gamma_bound(const TheoryConstants& k, double alpha, double beta) {
  const double b2 = k.lam_max_B * k.lam_max_B;
  return make_bound({(2.0 - 2.0 * b2) / (1.0 - alpha * beta * k.lam_min_PiPiT),
                     1.0 / b2});
}

BetaGammaBounds beta_gamma_bounds(const TheoryConstants& k, double alpha,
                                  double beta) {
  return {beta_bound(k, alpha), gamma_bound(k, alpha, beta)};
}

Contraction contraction_factor(const TheoryConstants& k, double alpha,
                               double beta, double gamma) {
  Contraction c;
  c.terms[0] = rho_m_alpha(k, alpha);
  c.terms[1] = 1.0 - alpha * beta * k.lam_min_PiPiT;
  c.terms[2] = 1.0 - k.min_nonzero_sv_B * k.min_nonzero_sv_B * gamma;
  c.a = std::max({c.terms[0], c.terms[1], c.terms[2]});

  if (k.sigma <= 0.0 || alpha <= 0.0 || beta <= 0.0 || gamma <= 0.0) return c;
  const Bound bb = beta_bound(k, alpha);
  const Bound gb = gamma_bound(k, alpha, beta);
  c.certified = c.terms[0] < 1.0 && beta < bb.value && gamma < gb.value &&
                c.a > 0.0 && c.a < 1.0;
  return c;
}

nlohmann::json certification_report(const TheoryConstants& k, double alpha,
                                     double beta, double gamma) {
  nlohmann::json rep;
  rep["constants"] = to_json(k);
  rep["stepsizes"] = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}};
  rep["alpha_terms"] = bound_json(alpha_bound(k));
  rep["rho_M_alpha"] = rho_m_alpha(k, alpha);
  try {
    const BetaGammaBounds bg = beta_gamma_bounds(k, alpha, beta);
    rep["beta_terms"] = bound_json(bg.beta);
    rep["gamma_terms"] = bound_json(bg.gamma);
  } catch (const Error& e) {
    if (e.code() != Errc::DegenerateSigma) throw;
    rep["beta_terms"] = nullptr;
    rep["gamma_terms"] = nullptr;
    rep["error"] = std::string(to_string(e.code()));
    rep["error_detail"] = e.what();
  }
  const Contraction c = contraction_factor(k, alpha, beta, gamma);
  rep["a"] = c.a;
  rep["a_terms"] = c.terms;
  rep["certified"] = c.certified;
  return rep;
}

nlohmann::json to_json(const TheoryConstants& k) {
  return {{"mu", k.mu},
          {"L", k.L},
          {"sigma", k.sigma},
          {"N", k.N},
          {"lam_max_PiTPi", k.lam_max_PiTPi},
          {"lam_min_PiPiT", k.lam_min_PiPiT},
          {"lam_max_B", k.lam_max_B},
          {"min_nonzero_sv_B", k.min_nonzero_sv_B}};
}

}  // namespace gnelin
