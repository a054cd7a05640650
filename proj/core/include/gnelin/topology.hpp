#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "gnelin/rng.hpp"

namespace gnelin {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Symmetric boolean adjacency; diagonal entries are ignored.
using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct SpectralBounds {
  double lambda_max_B = 0.0;
  double min_nonzero_sv_B = 0.0;
};

/// Communication graph plus every matrix and spectral constant derived from
/// it. Build with make_topology(); the fields are validated on construction.
struct Topology {
  int n = 0;
  Adjacency adjacency;
  MatrixXd W;  // symmetric doubly stochastic mixing weights
  MatrixXd C;  // gossip matrix (I - W) / 2
  MatrixXd B;  // symmetric PSD square root of C
  double sigma = 0.0;
  double lambda_max_B = 0.0;
  double min_nonzero_sv_B = 0.0;

  /// neighbors[i] lists every j with W(i, j) != 0, including i itself, in
  /// increasing order.
  std::vector<std::vector<int>> neighbors;

  /// True when W is the complete-average matrix 11^T/N. The stepsize
  /// certificate degenerates in that case.
  bool complete_average() const { return sigma == 0.0; }
};

bool is_symmetric(const Adjacency& adjacency);
bool is_connected(const Adjacency& adjacency);

/// Metropolis-Hastings weights w_ij = 1 / (1 + max(d_i, d_j)) on edges.
MatrixXd build_metropolis(const Adjacency& adjacency);

/// Throws InvalidWeights (or NonSymmetric / DisconnectedGraph) unless W is a
/// symmetric doubly stochastic matrix with positive diagonal supported on the
/// edges of `adjacency`.
void validate_weights(const MatrixXd& W, const Adjacency& adjacency);

/// Spectral norm of W - 11^T/N.
double consensus_gap(const MatrixXd& W);

MatrixXd gossip_matrix(const MatrixXd& W);

/// Eigen-decomposition square root; eigenvalues in [-1e-8, 0) are clamped.
MatrixXd matrix_sqrt_psd(const MatrixXd& C);

SpectralBounds spectral_bounds(const MatrixXd& B);

Topology make_topology(const Adjacency& adjacency);
Topology make_topology(const Adjacency& adjacency, const MatrixXd& W);

Adjacency ring_graph(int n);
Adjacency path_graph(int n);
Adjacency complete_graph(int n);
/// Erdos-Renyi graph conditioned on connectivity: a random spanning tree is
/// laid down first, then every remaining pair is added with probability p.
Adjacency random_connected_graph(int n, double edge_probability, Rng& rng);

/// {"n", "edges": [[i, j], ...], "weights"?: row-major, "sigma"}.
nlohmann::json topology_to_json(const Topology& topology);
Topology topology_from_json(const nlohmann::json& doc);

}  // namespace gnelin
