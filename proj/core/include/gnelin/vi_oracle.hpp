#pragma once

#include <Eigen/Dense>
#include <functional>

#include "gnelin/game.hpp"

namespace gnelin {

/// Centralized variational inequality F(x*)^T (x - x*) >= 0 on {Ax <= b}.
struct VIProblem {
  std::function<VectorXd(const VectorXd&)> F;
  CoupledConstraint constraint;
  double mu = 0.0;  // strong monotonicity of F
  double L = 0.0;   // Lipschitz constant of F
  /// Projected-gradient step. Defaults to mu / L^2 when left at zero.
  double step = 0.0;
};

/// For symmetric M the step is 2 / (mu + L), the minimiser of ||I - eta M||;
/// otherwise mu / L^2.
VIProblem make_vi_problem(const AffineGame& game);

struct KKTReport {
  double stationarity = 0.0;      // ||F(x) + A^T lambda||_inf
  double primal_violation = 0.0;  // ||max(Ax - b, 0)||_inf
  double dual_violation = 0.0;    // ||max(-lambda, 0)||_inf
  double complementarity = 0.0;   // |lambda^T (Ax - b)|
  double residual = 0.0;          // max of the four
};

struct ProjectionOptions {
  double tol = 1e-10;  // on the projected dual gradient
  int max_iters = 1'000'000;
};

/// Euclidean projection onto {x : Ax <= b} by projected gradient ascent on
/// the dual. `eta` is an optional warm start for the multipliers and receives
/// the final multipliers.
VectorXd project_polyhedron(const VectorXd& z, const MatrixXd& A,
                            const VectorXd& b, const ProjectionOptions& opts = {},
                            VectorXd* eta = nullptr);

struct VISolution {
  VectorXd x_star;
  int iterations = 0;
  double natural_residual = 0.0;
};

struct VIOptions {
  double tol = 1e-12;
  int max_iters = 1'000'000;
  /// Called with every iterate, starting from the initial point.
  std::function<void(const VectorXd&)> observer;
};

/// x <- P(x - step F(x)) from the stored feasible point until the natural
/// residual ||x - P(x - step F(x))||_inf <= tol.
VISolution solve_vi(const VIProblem& problem, const VIOptions& opts = {});

/// Nonnegative least squares min ||E w - d|| s.t. w >= 0 (Lawson-Hanson).
VectorXd nnls(const MatrixXd& E, const VectorXd& d);

/// Multiplier on the rows active within 1e-7; the KKT residual of the pair is
/// checked against 1e-6 (MultiplierInconsistent otherwise).
VectorXd recover_multiplier(const VIProblem& problem, const VectorXd& x_star);

KKTReport kkt_residual(const VIProblem& problem, const VectorXd& x,
                       const VectorXd& lambda);

}  // namespace gnelin
