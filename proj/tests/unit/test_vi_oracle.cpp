#include <doctest.h>

#include "fixtures.hpp"
#include "gnelin/error.hpp"
#include "gnelin/vi_oracle.hpp"
#include "oracles.hpp"

using namespace gnelin;

namespace {

VectorXd random_vector(Rng& rng, int n, double lo, double hi) {
  VectorXd v(n);
  for (int k = 0; k < n; ++k) v(k) = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("halfspace projection") {
  const MatrixXd A = (MatrixXd(1, 2) << 1, 1).finished();
  const VectorXd b = VectorXd::Constant(1, 4.0);
  CHECK((project_polyhedron(Eigen::Vector2d(3, 3), A, b) - Eigen::Vector2d(2, 2))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  const Eigen::Vector2d inside(1, -2);
  CHECK(project_polyhedron(inside, A, b) == inside);
}

TEST_CASE("projection matches single-row closed form and is nonexpansive") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    const VectorXd a = random_vector(rng, n, -1, 1);
    const double beta = rng.uniform(-1, 1);
    const MatrixXd A = a.transpose();
    const VectorXd b = VectorXd::Constant(1, beta);
    const VectorXd z = random_vector(rng, n, -3, 3);
    CHECK((project_polyhedron(z, A, b) - oracle::halfspace_projection(z, a, beta))
              .norm() <= 1e-9);
  }
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(4));
    const int m = 1 + static_cast<int>(rng.below(3));
    MatrixXd A(m, n);
    for (int i = 0; i < m; ++i) A.row(i) = random_vector(rng, n, -1, 1).transpose();
    const VectorXd b = random_vector(rng, m, 0.1, 1.0);
    const VectorXd u = random_vector(rng, n, -4, 4);
    const VectorXd v = random_vector(rng, n, -4, 4);
    const VectorXd pu = project_polyhedron(u, A, b);
    const VectorXd pv = project_polyhedron(v, A, b);
    CHECK((pu - pv).norm() <= (u - v).norm() + 1e-10);
    CHECK(((A * pu - b).array() <= 1e-8).all());
  }
}

TEST_CASE("two-player fixture") {
  const AffineGame g = fixture::two_player();
  const VIProblem p = make_vi_problem(g);
  const VISolution sol = solve_vi(p);
  const oracle::KktPair exact = oracle::scalar_game_solution(Eigen::Vector2d(3, 2), 4.0);
  CHECK((sol.x_star - exact.x).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(exact.x.isApprox(Eigen::Vector2d(2.5, 1.5)));
  const VectorXd lambda = recover_multiplier(p, sol.x_star);
  CHECK(lambda(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kkt_residual(p, sol.x_star, lambda).residual <= 1e-12);

  const KKTReport at_zero = kkt_residual(p, VectorXd::Zero(2), VectorXd::Zero(1));
  CHECK(at_zero.stationarity == 6.0);
  const KKTReport neg = kkt_residual(p, sol.x_star, VectorXd::Constant(1, -0.25));
  CHECK(neg.dual_violation == 0.25);
}

TEST_CASE("inactive constraint") {
  const AffineGame g = fixture::two_player(5.0);
  const VIProblem p = make_vi_problem(g);
  const VISolution sol = solve_vi(p);
  CHECK((sol.x_star - Eigen::Vector2d(3, 2)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(recover_multiplier(p, sol.x_star)(0) == 0.0);
}

TEST_CASE("solve_vi agrees with active-set enumeration") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    RandomAffineSpec spec;
    spec.players = 2 + static_cast<int>(rng.below(4));
    spec.m = 1 + static_cast<int>(rng.below(3));
    const AffineGame g = random_affine_game(spec, rng);
    const auto& con = g.constraint();
    const auto exact = oracle::affine_vi_by_active_sets(g.M(), g.c(), con.A, con.b);
    REQUIRE(exact.has_value());
    const VIProblem p = make_vi_problem(g);
    const VISolution sol = solve_vi(p);
    CHECK((sol.x_star - exact->x).cwiseAbs().maxCoeff() <= 1e-8);
    const VectorXd lambda = recover_multiplier(p, sol.x_star);
    CHECK((lambda - exact->lambda).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(kkt_residual(p, sol.x_star, lambda).residual <= 1e-6);
  }
}

TEST_CASE("projected gradient contracts at rate sqrt(1 - mu^2/L^2)") {
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    RandomAffineSpec spec;
    spec.players = 3;
    spec.m = 2;
    const AffineGame g = random_affine_game(spec, rng);
    const auto& con = g.constraint();
    const auto exact = oracle::affine_vi_by_active_sets(g.M(), g.c(), con.A, con.b);
    REQUIRE(exact.has_value());
    VIProblem p = make_vi_problem(g);
    p.step = p.mu / (p.L * p.L);
    const double q = std::sqrt(1.0 - p.mu * p.mu / (p.L * p.L)) + 1e-10;
    std::vector<VectorXd> iterates;
    VIOptions opts;
    opts.tol = 1e-9;
    opts.observer = [&](const VectorXd& x) { iterates.push_back(x); };
    solve_vi(p, opts);
    for (std::size_t k = 0; k + 1 < iterates.size() && k < 500; ++k) {
      const double e0 = (iterates[k] - exact->x).norm();
      const double e1 = (iterates[k + 1] - exact->x).norm();
      // Below this the projection tolerance dominates the error.
      if (e0 < 1e-7) break;
      CHECK(e1 <= q * e0 + 1e-9);
    }
  }
}

TEST_CASE("solve_vi is deterministic") {
  Rng rng(27);
  RandomAffineSpec spec;
  spec.players = 4;
  spec.m = 2;
  const AffineGame g = random_affine_game(spec, rng);
  const VIProblem p = make_vi_problem(g);
  const VISolution a = solve_vi(p);
  const VISolution b = solve_vi(p);
  CHECK(a.x_star == b.x_star);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("iteration cap raises MaxIterExceeded") {
  const VIProblem p = make_vi_problem(fixture::five_player());
  VIOptions opts;
  opts.max_iters = 1;
  opts.tol = 1e-14;
  try {
    solve_vi(p, opts);
    FAIL("expected MaxIterExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MaxIterExceeded);
  }
}

TEST_CASE("duplicated constraint rows") {
  // Two identical rows make the multiplier split non-unique.
  const Dims d = Dims::uniform(2, 1, 2);
  const MatrixXd Ai = MatrixXd::Ones(2, 1);
  std::vector<MatrixXd> A{Ai, Ai};
  std::vector<VectorXd> b{VectorXd::Constant(2, 2.0), VectorXd::Constant(2, 2.0)};
  bool singular = false;
  try {
    make_constraint(d, A, b);
  } catch (const Error& e) {
    singular = e.code() == Errc::SingularBlock;
  }
  // Each A_i must have full row rank, so the duplicate is rejected up front.
  CHECK(singular);

  // The problem itself can still carry a repeated row when built by hand.
  VIProblem p;
  p.F = [](const VectorXd& x) { VectorXd g = x.array() - 3.0; return g; };
  p.constraint.A = (MatrixXd(2, 2) << 1, 1, 1, 1).finished();
  p.constraint.b = Eigen::Vector2d(4, 4);
  p.constraint.feasible_point = VectorXd::Zero(2);
  p.mu = 1.0;
  p.L = 1.0;
  p.step = 1.0;
  const VISolution sol = solve_vi(p);
  CHECK((sol.x_star - Eigen::Vector2d(2, 2)).cwiseAbs().maxCoeff() <= 1e-9);
  try {
    const VectorXd lambda = recover_multiplier(p, sol.x_star);
    CHECK(lambda.sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(kkt_residual(p, sol.x_star, lambda).residual <= 1e-6);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MultiplierInconsistent);
  }
}

TEST_CASE("nnls") {
  MatrixXd E(3, 2);
  E << 1, 0, 0, 1, 1, 1;
  const VectorXd d = Eigen::Vector3d(1, -2, 0);
  const VectorXd w = nnls(E, d);
  CHECK((w.array() >= 0.0).all());
  // Unconstrained optimum has a negative second weight; the active-set
  // answer is w = (1/2, 0).
  CHECK(w(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w(1) == 0.0);
}
