#include <doctest.h>

#include <cmath>

#include "gnelin/error.hpp"
#include "gnelin/topology.hpp"
#include "oracles.hpp"

using namespace gnelin;

namespace {

Adjacency from_edges(int n, const std::vector<std::vector<int>>& edges) {
  Adjacency a = Adjacency::Constant(n, n, false);
  for (const auto& e : edges) a(e[0], e[1]) = a(e[1], e[0]) = true;
  return a;
}

std::vector<std::vector<int>> edges_of(const Adjacency& a) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j)
      if (a(i, j)) out.push_back({i, j});
  return out;
}

template <class F>
void check_throws_code(F&& f, Errc code) {
  try {
    f();
    FAIL("expected error ", to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("metropolis weights on small graphs") {
  MatrixXd W2 = build_metropolis(path_graph(2));
  CHECK(W2.isApprox(MatrixXd::Constant(2, 2, 0.5), 1e-15));

  MatrixXd W4 = build_metropolis(ring_graph(4));
  for (int i = 0; i < 4; ++i) {
    CHECK(W4(i, i) == doctest::Approx(1.0 / 3.0));
    CHECK(W4(i, (i + 1) % 4) == doctest::Approx(1.0 / 3.0));
    CHECK(W4(i, (i + 2) % 4) == 0.0);
  }

  MatrixXd W3 = build_metropolis(complete_graph(3));
  CHECK(W3.isApprox(MatrixXd::Constant(3, 3, 1.0 / 3.0), 1e-15));
}

TEST_CASE("metropolis matches the degree formula on random graphs") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(19));
    const Adjacency a = random_connected_graph(n, 0.3, rng);
    const MatrixXd W = build_metropolis(a);
    CHECK((W - oracle::metropolis(edges_of(a), n)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK_NOTHROW(validate_weights(W, a));
  }
}

TEST_CASE("metropolis rejects bad graphs") {
  check_throws_code([] { build_metropolis(from_edges(4, {{0, 1}, {2, 3}})); },
                    Errc::DisconnectedGraph);
  Adjacency a = path_graph(3);
  a(0, 1) = false;
  check_throws_code([&] { build_metropolis(a); }, Errc::NonSymmetric);
}

TEST_CASE("consensus gap") {
  CHECK(consensus_gap(MatrixXd::Constant(4, 4, 0.25)) == 0.0);
  CHECK(consensus_gap(MatrixXd::Constant(2, 2, 0.5)) == 0.0);
  CHECK(consensus_gap(build_metropolis(ring_graph(4))) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const double s5 = consensus_gap(build_metropolis(ring_graph(5)));
  CHECK(s5 == doctest::Approx(oracle::ring_sigma(5)).epsilon(1e-12));
  CHECK(std::abs(s5 - 0.5387) <= 1e-3);
}

TEST_CASE("gossip matrix and square root") {
  const MatrixXd C = gossip_matrix(MatrixXd::Constant(2, 2, 0.5));
  MatrixXd expected(2, 2);
  expected << 0.25, -0.25, -0.25, 0.25;
  CHECK(C.isApprox(expected, 1e-15));

  const MatrixXd C4 = gossip_matrix(build_metropolis(ring_graph(4)));
  CHECK(C4(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(C4(0, 1) == doctest::Approx(-1.0 / 6.0));
  CHECK(C4(0, 2) == 0.0);

  CHECK(matrix_sqrt_psd(MatrixXd::Zero(3, 3)).isZero(0.0));
  CHECK(matrix_sqrt_psd(MatrixXd::Identity(3, 3)).isApprox(MatrixXd::Identity(3, 3), 1e-14));

  const MatrixXd B = matrix_sqrt_psd(C);
  const double a = std::sqrt(0.5) / 2.0;
  CHECK(B(0, 0) == doctest::Approx(a).epsilon(1e-12));
  CHECK(B(0, 1) == doctest::Approx(-a).epsilon(1e-12));

  MatrixXd indefinite = MatrixXd::Identity(2, 2);
  indefinite(1, 1) = -1e-6;
  check_throws_code([&] { matrix_sqrt_psd(indefinite); }, Errc::NotPSD);
  indefinite(1, 1) = -1e-9;
  CHECK_NOTHROW(matrix_sqrt_psd(indefinite));
}

TEST_CASE("square root of random PSD matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(20));
    const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    MatrixXd G(n, r);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < r; ++j) G(i, j) = rng.uniform(-1.0, 1.0);
    const MatrixXd C = G * G.transpose();
    const MatrixXd B = matrix_sqrt_psd(C);
    REQUIRE((B * B - C).norm() <= 1e-10);
    REQUIRE((B - B.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("spectral bounds") {
  const MatrixXd B = matrix_sqrt_psd(gossip_matrix(MatrixXd::Constant(2, 2, 0.5)));
  const SpectralBounds sb = spectral_bounds(B);
  CHECK(sb.lambda_max_B == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(sb.min_nonzero_sv_B == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  check_throws_code([] { spectral_bounds(MatrixXd::Zero(1, 1)); },
                    Errc::RankThresholdAmbiguous);
  MatrixXd near(2, 2);
  near << 1.0, 0.0, 0.0, 1e-9;
  check_throws_code([&] { spectral_bounds(near); }, Errc::RankThresholdAmbiguous);

  const Topology t = make_topology(ring_graph(5));
  const double lmin_W = 1.0 / 3.0 + 2.0 / 3.0 * std::cos(4.0 * std::numbers::pi / 5.0);
  CHECK(t.lambda_max_B ==
        doctest::Approx(std::sqrt((1.0 - lmin_W) / 2.0)).epsilon(1e-12));
  CHECK(std::abs(t.lambda_max_B - 0.7766) <= 1e-4);
}

TEST_CASE("topology invariants on random connected graphs") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(19));
    const Topology t = make_topology(random_connected_graph(n, rng.uniform01(), rng));
    CHECK(is_connected(t.adjacency));
    CHECK(t.sigma < 1.0);
    CHECK(t.sigma >= 0.0);
    CHECK((t.C - 0.5 * (MatrixXd::Identity(n, n) - t.W)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((t.B * t.B - t.C).norm() <= 1e-10);
    CHECK((t.B * VectorXd::Ones(n)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(t.lambda_max_B < 1.0);
    for (int i = 0; i < n; ++i) {
      CHECK(t.W.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(t.W(i, i) > 0.0);
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(t.W);
    int unit = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double ev = es.eigenvalues()(k);
      if (std::abs(ev - 1.0) <= 1e-12) ++unit;
      else CHECK(std::abs(ev) < 1.0);
    }
    CHECK(unit == 1);
  }
}

TEST_CASE("null space of B is the consensus line") {
  Rng rng(5);
  const Topology t = make_topology(random_connected_graph(8, 0.3, rng));
  VectorXd same = VectorXd::Constant(8, rng.uniform(-3, 3));
  CHECK((t.B * same).cwiseAbs().maxCoeff() <= 1e-10);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd y(8);
    for (int i = 0; i < 8; ++i) y(i) = rng.uniform(-1, 1);
    CHECK((t.B * y).cwiseAbs().maxCoeff() > 1e-10);
  }
}

TEST_CASE("user weights are validated") {
  const Adjacency a = path_graph(3);
  MatrixXd W = build_metropolis(a);
  CHECK_NOTHROW(make_topology(a, W));
  MatrixXd asym = W;
  asym(0, 1) += 0.01;
  asym(0, 0) -= 0.01;
  check_throws_code([&] { make_topology(a, asym); }, Errc::NonSymmetric);
  MatrixXd off_support = W;
  off_support(0, 2) = off_support(2, 0) = 0.1;
  off_support(0, 0) -= 0.1;
  off_support(2, 2) -= 0.1;
  check_throws_code([&] { make_topology(a, off_support); }, Errc::InvalidWeights);
}

TEST_CASE("complete average weights give sigma zero") {
  const Topology t = make_topology(path_graph(2));
  CHECK(t.sigma == 0.0);
  CHECK(t.complete_average());
}

TEST_CASE("topology json round trip") {
  Rng rng(9);
  const Topology t = make_topology(random_connected_graph(6, 0.4, rng));
  const nlohmann::json j = topology_to_json(t);
  CHECK(j.contains("sigma"));
  CHECK(j["n"] == 6);
  const Topology back = topology_from_json(j);
  CHECK(back.W == t.W);
  CHECK(back.adjacency == t.adjacency);

  nlohmann::json edges_only = {{"n", 4}, {"edges", {{0, 1}, {1, 2}, {2, 3}, {3, 0}}}};
  CHECK(topology_from_json(edges_only).sigma ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}
