#include "gnelin/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gnelin/error.hpp"

namespace gnelin {

namespace {

constexpr double kWeightTol = 1e-12;
constexpr double kPsdClamp = 1e-8;
constexpr double kRankRelThreshold = 1e-9;
// Below this the deflated matrix is treated as exactly zero.
constexpr double kSigmaZero = 1e-13;

std::vector<int> degrees(const Adjacency& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  std::vector<int> deg(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && adjacency(i, j)) ++deg[i];
  return deg;
}

void check_square(const Adjacency& adjacency) {
  require(adjacency.rows() == adjacency.cols() && adjacency.rows() >= 1,
          Errc::DimensionMismatch, "adjacency must be a nonempty square matrix");
}

}  // namespace

bool is_symmetric(const Adjacency& adjacency) {
  if (adjacency.rows() != adjacency.cols()) return false;
  const auto n = adjacency.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (adjacency(i, j) != adjacency(j, i)) return false;
  return true;
}

bool is_connected(const Adjacency& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int visited = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (v != u && adjacency(u, v) && !seen[v]) {
        seen[v] = 1;
        ++visited;
        stack.push_back(v);
      }
    }
  }
  return visited == n;
}

MatrixXd build_metropolis(const Adjacency& adjacency) {
  check_square(adjacency);
  require(is_symmetric(adjacency), Errc::NonSymmetric,
          "adjacency is not symmetric");
  require(adjacency.rows() >= 2, Errc::DimensionMismatch,
          "Metropolis weights need at least two nodes");
  require(is_connected(adjacency), Errc::DisconnectedGraph,
          "adjacency is not connected");

  const int n = static_cast<int>(adjacency.rows());
  const auto deg = degrees(adjacency);
  MatrixXd W = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j || !adjacency(i, j)) continue;
      W(i, j) = 1.0 / (1.0 + std::max(deg[i], deg[j]));
      off += W(i, j);
    }
    W(i, i) = 1.0 - off;
  }
  return W;
}

void validate_weights(const MatrixXd& W, const Adjacency& adjacency) {
  check_square(adjacency);
  const auto n = adjacency.rows();
  require(W.rows() == n && W.cols() == n, Errc::DimensionMismatch,
          "weight matrix does not match the graph size");
  require(W.allFinite(), Errc::InvalidWeights, "weights must be finite");
  require(is_symmetric(adjacency), Errc::NonSymmetric,
          "adjacency is not symmetric");
  require(is_connected(adjacency), Errc::DisconnectedGraph,
          "adjacency is not connected");
  require((W - W.transpose()).cwiseAbs().maxCoeff() <= kWeightTol,
          Errc::NonSymmetric, "weight matrix is not symmetric");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(std::abs(W.row(i).sum() - 1.0) <= kWeightTol, Errc::InvalidWeights,
            "row " + std::to_string(i) + " does not sum to one");
    require(W(i, i) > 0.0, Errc::InvalidWeights,
            "self-weight of node " + std::to_string(i) + " must be positive");
    for (Eigen::Index j = 0; j < n; ++j) {
      require(W(i, j) >= 0.0, Errc::InvalidWeights, "negative weight");
      if (i != j && !adjacency(i, j))
        require(W(i, j) == 0.0, Errc::InvalidWeights,
                "nonzero weight on a non-edge (" + std::to_string(i) + ", " +
                    std::to_string(j) + ")");
      if (i != j && adjacency(i, j))
        require(W(i, j) > 0.0, Errc::InvalidWeights,
                "edge (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") has zero weight");
    }
  }
}

double consensus_gap(const MatrixXd& W) {
  const auto n = W.rows();
  const MatrixXd deflated =
      W - MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  if (deflated.cwiseAbs().maxCoeff() <= kSigmaZero) return 0.0;
  // W is symmetric, so the spectral norm is the largest |eigenvalue|.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(deflated, Eigen::EigenvaluesOnly);
  const double s = es.eigenvalues().cwiseAbs().maxCoeff();
  return s <= kSigmaZero ? 0.0 : s;
}

MatrixXd gossip_matrix(const MatrixXd& W) {
  const auto n = W.rows();
  return 0.5 * (MatrixXd::Identity(n, n) - W);
}

MatrixXd matrix_sqrt_psd(const MatrixXd& C) {
  require(C.rows() == C.cols(), Errc::DimensionMismatch,
          "matrix_sqrt_psd needs a square matrix");
  if (C.size() == 0) return C;
  const MatrixXd sym = 0.5 * (C + C.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  const VectorXd& ev = es.eigenvalues();
  require(ev.minCoeff() >= -kPsdClamp, Errc::NotPSD,
          "matrix has eigenvalue " + std::to_string(ev.minCoeff()));
  // Round-off around a zero eigenvalue would otherwise become a spurious
  // singular value of order sqrt(eps) in the root.
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, ev.cwiseAbs().maxCoeff());
  const VectorXd root =
      ev.unaryExpr([noise](double e) { return e <= noise ? 0.0 : e; })
          .cwiseSqrt();
  MatrixXd B = es.eigenvectors() * root.asDiagonal() *
               es.eigenvectors().transpose();
  return 0.5 * (B + B.transpose());
}

SpectralBounds spectral_bounds(const MatrixXd& B) {
  require(B.rows() == B.cols() && B.rows() > 0, Errc::DimensionMismatch,
          "spectral_bounds needs a nonempty square matrix");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(B, Eigen::EigenvaluesOnly);
  const VectorXd sv = es.eigenvalues().cwiseAbs();
  SpectralBounds out;
  out.lambda_max_B = es.eigenvalues().maxCoeff();
  const double threshold = kRankRelThreshold * sv.maxCoeff();
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    const double s = sv(k);
    require(!(s >= threshold / 10.0 && s <= threshold * 10.0),
            Errc::RankThresholdAmbiguous,
            "singular value " + std::to_string(s) +
                " is too close to the rank threshold");
    if (s > threshold) smallest = std::min(smallest, s);
  }
  require(std::isfinite(smallest), Errc::RankThresholdAmbiguous,
          "matrix has no nonzero singular value");
  out.min_nonzero_sv_B = smallest;
  return out;
}

namespace {

Topology assemble(const Adjacency& adjacency, const MatrixXd& W) {
  validate_weights(W, adjacency);
  Topology t;
  t.n = static_cast<int>(adjacency.rows());
  t.adjacency = adjacency;
  t.adjacency.diagonal().setConstant(false);
  t.W = W;
  t.sigma = consensus_gap(W);
  t.C = gossip_matrix(W);
  t.B = matrix_sqrt_psd(t.C);
  const SpectralBounds sb = spectral_bounds(t.B);
  t.lambda_max_B = sb.lambda_max_B;
  t.min_nonzero_sv_B = sb.min_nonzero_sv_B;
  t.neighbors.resize(t.n);
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      if (W(i, j) != 0.0) t.neighbors[i].push_back(j);
  return t;
}

}  // namespace

Topology make_topology(const Adjacency& adjacency) {
  return assemble(adjacency, build_metropolis(adjacency));
}

Topology make_topology(const Adjacency& adjacency, const MatrixXd& W) {
  return assemble(adjacency, W);
}

Adjacency ring_graph(int n) {
  require(n >= 2, Errc::DimensionMismatch, "ring needs at least two nodes");
  Adjacency a = Adjacency::Constant(n, n, false);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    if (j != i) a(i, j) = a(j, i) = true;
  }
  return a;
}

Adjacency path_graph(int n) {
  require(n >= 2, Errc::DimensionMismatch, "path needs at least two nodes");
  Adjacency a = Adjacency::Constant(n, n, false);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = true;
  return a;
}

Adjacency complete_graph(int n) {
  require(n >= 2, Errc::DimensionMismatch, "graph needs at least two nodes");
  Adjacency a = Adjacency::Constant(n, n, true);
  a.diagonal().setConstant(false);
  return a;
}

Adjacency random_connected_graph(int n, double edge_probability, Rng& rng) {
  require(n >= 2, Errc::DimensionMismatch, "graph needs at least two nodes");
  require(edge_probability >= 0.0 && edge_probability <= 1.0,
          Errc::InvalidConfig, "edge probability must lie in [0, 1]");
  Adjacency a = Adjacency::Constant(n, n, false);
  // Random attachment tree: node k links to a uniformly chosen earlier node.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int k = n - 1; k > 0; --k)
    std::swap(order[k], order[rng.below(static_cast<std::uint64_t>(k) + 1)]);
  for (int k = 1; k < n; ++k) {
    const int parent = order[rng.below(static_cast<std::uint64_t>(k))];
    a(order[k], parent) = a(parent, order[k]) = true;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!a(i, j) && rng.uniform01() < edge_probability)
        a(i, j) = a(j, i) = true;
  return a;
}

nlohmann::json topology_to_json(const Topology& topology) {
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i < topology.n; ++i)
    for (int j = i + 1; j < topology.n; ++j)
      if (topology.adjacency(i, j)) edges.push_back({i, j});
  std::vector<double> weights(topology.W.size());
  for (int i = 0; i < topology.n; ++i)
    for (int j = 0; j < topology.n; ++j)
      weights[static_cast<std::size_t>(i) * topology.n + j] = topology.W(i, j);
  return {{"n", topology.n},
          {"edges", edges},
          {"weights", weights},
          {"sigma", topology.sigma}};
}

Topology topology_from_json(const nlohmann::json& doc) {
  require(doc.contains("n") && doc.contains("edges"), Errc::InvalidConfig,
          "topology document needs \"n\" and \"edges\"");
  const int n = doc.at("n").get<int>();
  require(n >= 1, Errc::InvalidConfig, "topology needs n >= 1");
  Adjacency a = Adjacency::Constant(n, n, false);
  for (const auto& e : doc.at("edges")) {
    require(e.is_array() && e.size() == 2, Errc::InvalidConfig,
            "each edge must be an [i, j] pair");
    const int i = e[0].get<int>();
    const int j = e[1].get<int>();
    require(i >= 0 && j >= 0 && i < n && j < n && i != j, Errc::InvalidConfig,
            "edge index out of range");
    a(i, j) = a(j, i) = true;
  }
  if (!doc.contains("weights")) return make_topology(a);
  const auto w = doc.at("weights").get<std::vector<double>>();
  require(w.size() == static_cast<std::size_t>(n) * n, Errc::InvalidConfig,
          "weights must hold n*n row-major entries");
  MatrixXd W(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) W(i, j) = w[static_cast<std::size_t>(i) * n + j];
  return make_topology(a, W);
}

}  // namespace gnelin
