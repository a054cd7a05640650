#include "gnelin/vi_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gnelin/error.hpp"

namespace gnelin {

namespace {

constexpr double kActiveTol = 1e-7;
constexpr double kMultiplierTol = 1e-6;
constexpr double kProjectionKktTol = 1e-9;

}  // namespace

VIProblem make_vi_problem(const AffineGame& game) {
  const MonotonicityConstants k = monotonicity_constants(game);
  VIProblem p;
  const MatrixXd M = game.M();
  const VectorXd c = game.c();
  p.F = [M, c](const VectorXd& x) -> VectorXd { return M * x + c; };
  p.constraint = game.constraint();
  p.mu = k.mu;
  p.L = k.L_full;
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym <= 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
    p.step = 2.0 / (k.mu + k.L_full);
  else
    p.step = k.mu / (k.L_full * k.L_full);
  return p;
}

VectorXd project_polyhedron(const VectorXd& z, const MatrixXd& A,
                            const VectorXd& b, const ProjectionOptions& opts,
                            VectorXd* eta_io) {
  require(A.cols() == z.size() && A.rows() == b.size(), Errc::DimensionMismatch,
          "projection operands disagree in size");
  const VectorXd slack = A * z - b;
  if (slack.maxCoeff() <= 0.0) {
    if (eta_io) *eta_io = VectorXd::Zero(b.size());
    return z;
  }
  const MatrixXd gram = A * A.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double t = 1.0 / es.eigenvalues().maxCoeff();

  VectorXd eta = VectorXd::Zero(b.size());
  if (eta_io && eta_io->size() == b.size()) eta = eta_io->cwiseMax(0.0);

  const double eps = std::numeric_limits<double>::epsilon();
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const VectorXd grad = slack - gram * eta;
    const VectorXd next = (eta + t * grad).cwiseMax(0.0);
    // Projected gradient in unscaled units.
    residual = (next - eta).cwiseAbs().maxCoeff() / t;
    eta = next;
    // The gradient cannot be resolved below its own rounding error.
    const double floor =
        64.0 * eps *
        (slack.cwiseAbs().maxCoeff() + eta.cwiseAbs().maxCoeff() / t);
    if (residual <= std::max(opts.tol, floor)) break;
  }
  if (eta_io) *eta_io = eta;
  require(it < opts.max_iters, Errc::MaxIterExceeded,
          "polyhedral projection stalled at residual " + std::to_string(residual));

  const VectorXd x = z - A.transpose() * eta;
  const VectorXd r = A * x - b;
  const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
  const double violation = r.cwiseMax(0.0).maxCoeff();
  const double compl_gap = std::abs(eta.dot(r));
  require(violation <= kProjectionKktTol * scale &&
              compl_gap <= kProjectionKktTol * scale,
          Errc::MaxIterExceeded,
          "projection KKT check failed (violation " + std::to_string(violation) +
              ", complementarity " + std::to_string(compl_gap) + ")");
  return x;
}

VISolution solve_vi(const VIProblem& problem, const VIOptions& opts) {
  require(problem.mu > 0.0 && problem.L > 0.0, Errc::NotStronglyMonotone,
          "VI solver needs mu > 0 and L > 0");
  const auto& con = problem.constraint;
  const double step =
      problem.step > 0.0 ? problem.step : problem.mu / (problem.L * problem.L);
  ProjectionOptions popts;
  popts.tol = std::min(1e-10, 0.1 * opts.tol);

  VectorXd x = con.feasible_point;
  VectorXd eta;
  VISolution out;
  for (int it = 0; it < opts.max_iters; ++it) {
    if (opts.observer) opts.observer(x);
    const VectorXd next =
        project_polyhedron(x - step * problem.F(x), con.A, con.b, popts, &eta);
    const double r = (x - next).cwiseAbs().maxCoeff();
    require(std::isfinite(r), Errc::NonFinite, "VI iterate became non-finite");
    if (r <= opts.tol) {
      out.x_star = x;
      out.iterations = it;
      out.natural_residual = r;
      return out;
    }
    x = next;
  }
  fail(Errc::MaxIterExceeded,
       "VI solver did not reach tolerance in " + std::to_string(opts.max_iters) +
           " iterations");
}

VectorXd nnls(const MatrixXd& E, const VectorXd& d) {
  require(E.rows() == d.size(), Errc::DimensionMismatch, "nnls size mismatch");
  const Eigen::Index k = E.cols();
  VectorXd w = VectorXd::Zero(k);
  if (k == 0) return w;
  std::vector<char> passive(static_cast<std::size_t>(k), 0);
  const double tol =
      1e-12 * std::max(1.0, E.cwiseAbs().maxCoeff()) * std::max(1.0, d.norm());

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < k; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    MatrixXd Ep(E.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c)
      Ep.col(static_cast<Eigen::Index>(c)) = E.col(idx[c]);
    const VectorXd sp = Ep.completeOrthogonalDecomposition().solve(d);
    VectorXd s = VectorXd::Zero(k);
    for (std::size_t c = 0; c < idx.size(); ++c)
      s(idx[c]) = sp(static_cast<Eigen::Index>(c));
    return s;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(k) + 10; ++outer) {
    const VectorXd grad = E.transpose() * (d - E * w);
    Eigen::Index best = -1;
    double best_val = tol;
    for (Eigen::Index j = 0; j < k; ++j)
      if (!passive[static_cast<std::size_t>(j)] && grad(j) > best_val) {
        best = j;
        best_val = grad(j);
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = 1;
    for (int inner = 0; inner <= static_cast<int>(k); ++inner) {
      VectorXd s = solve_passive();
      bool feasible = true;
      for (Eigen::Index j = 0; j < k; ++j)
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) feasible = false;
      if (feasible) {
        w = s;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < k; ++j)
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0)
          alpha = std::min(alpha, w(j) / (w(j) - s(j)));
      w += alpha * (s - w);
      for (Eigen::Index j = 0; j < k; ++j)
        if (passive[static_cast<std::size_t>(j)] && w(j) <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = 0;
          w(j) = 0.0;
        }
    }
  }
  return w.cwiseMax(0.0);
}

VectorXd recover_multiplier(const VIProblem& problem, const VectorXd& x_star) {
  const auto& con = problem.constraint;
  const VectorXd g = problem.F(x_star);
  const VectorXd r = constraint_residual(con, x_star);
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < r.size(); ++j)
    if (r(j) >= -kActiveTol) active.push_back(j);

  VectorXd lambda = VectorXd::Zero(r.size());
  if (!active.empty()) {
    MatrixXd E(con.A.cols(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c)
      E.col(static_cast<Eigen::Index>(c)) = con.A.row(active[c]).transpose();
    const VectorXd w = nnls(E, -g);
    for (std::size_t c = 0; c < active.size(); ++c)
      lambda(active[c]) = w(static_cast<Eigen::Index>(c));
  }
  const KKTReport rep = kkt_residual(problem, x_star, lambda);
  require(rep.residual <= kMultiplierTol, Errc::MultiplierInconsistent,
          "KKT residual " + std::to_string(rep.residual) +
              " after multiplier recovery");
  return lambda;
}

KKTReport kkt_residual(const VIProblem& problem, const VectorXd& x,
                       const VectorXd& lambda) {
  const auto& con = problem.constraint;
  require(lambda.size() == con.A.rows(), Errc::DimensionMismatch,
          "multiplier must have length m");
  const VectorXd r = constraint_residual(con, x);
  KKTReport rep;
  rep.stationarity =
      (problem.F(x) + con.A.transpose() * lambda).cwiseAbs().maxCoeff();
  rep.primal_violation = r.cwiseMax(0.0).maxCoeff();
  rep.dual_violation = (-lambda).cwiseMax(0.0).maxCoeff();
  rep.complementarity = std::abs(lambda.dot(r));
  rep.residual = std::max({rep.stationarity, rep.primal_violation,
                           rep.dual_violation, rep.complementarity});
  return rep;
}

}  // namespace gnelin
