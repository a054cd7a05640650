#pragma once

#include <Eigen/Dense>
#include <memory>
#include <nlohmann/json.hpp>
#include <vector>

#include "gnelin/rng.hpp"

namespace gnelin {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Player count, per-player decision sizes and the number of coupled rows.
struct Dims {
  int players = 0;
  int n = 0;
  int m = 0;
  std::vector<int> block_sizes;
  std::vector<int> offsets;

  static Dims make(std::vector<int> block_sizes, int m);
  static Dims uniform(int players, int block_size, int m);

  int offset(int i) const { return offsets[static_cast<std::size_t>(i)]; }
  int size(int i) const { return block_sizes[static_cast<std::size_t>(i)]; }
};

bool operator==(const Dims& a, const Dims& b);

/// Coupled affine constraint Ax <= b with A = [A_1 ... A_N], b = sum b_i.
struct CoupledConstraint {
  std::vector<MatrixXd> A_blocks;
  std::vector<VectorXd> b_blocks;
  MatrixXd A;
  VectorXd b;
  /// Stacked minimum-norm solutions of A_i x_i = b_i; satisfies Ax = b.
  VectorXd feasible_point;
};

/// Minimum-norm solution A^T (A A^T)^{-1} b. Throws SingularBlock when A
/// does not have full row rank.
VectorXd min_norm_solution(const MatrixXd& A_i, const VectorXd& b_i);

CoupledConstraint make_constraint(const Dims& dims,
                                  std::vector<MatrixXd> A_blocks,
                                  std::vector<VectorXd> b_blocks);

/// Ax - b; nonpositive entries are satisfied rows.
VectorXd constraint_residual(const CoupledConstraint& constraint,
                             const VectorXd& x);

// Selection operators: index arithmetic standing in for the 0/1 matrices that
// pick a player's own block (R_i) or every other block (S_i) out of a full
// n-vector.
VectorXd select_own(const Dims& dims, int i, const VectorXd& copy);
VectorXd select_others(const Dims& dims, int i, const VectorXd& copy);
VectorXd merge_blocks(const Dims& dims, int i, const VectorXd& own,
                      const VectorXd& others);

/// Every player's private copy of the full decision profile. Column i is
/// player i's copy; its own block holds the player's actual decision.
struct ExtendedProfile {
  MatrixXd copies;  // n x N

  static ExtendedProfile zeros(const Dims& dims);
  static ExtendedProfile consensus(const Dims& dims, const VectorXd& x);

  /// Stacked own blocks, i.e. the true decision profile.
  VectorXd decisions(const Dims& dims) const;
  /// col(copy_1, ..., copy_N), length N*n.
  VectorXd stacked() const;
};

/// Continuous game with coupled affine constraints, accessed through its
/// per-player partial gradients. Instances are immutable.
class Game {
 public:
  Game(Dims dims, CoupledConstraint constraint);
  virtual ~Game() = default;

  const Dims& dims() const { return dims_; }
  const CoupledConstraint& constraint() const { return constraint_; }

  /// Gradient of player i's cost with respect to its own decision, evaluated
  /// at an arbitrary full profile.
  virtual VectorXd partial_gradient(int i, const VectorXd& profile) const = 0;

  virtual VectorXd pseudo_gradient(const VectorXd& x) const;

  /// Player i's block is evaluated at player i's own copy of the profile.
  VectorXd extended_pseudo_gradient(const ExtendedProfile& profile) const;

  virtual nlohmann::json to_json() const = 0;

 protected:
  void check_profile(const VectorXd& x) const;

  Dims dims_;
  CoupledConstraint constraint_;
};

/// Game whose pseudo-gradient is F(x) = Mx + c.
class AffineGame final : public Game {
 public:
  AffineGame(Dims dims, MatrixXd M, VectorXd c, CoupledConstraint constraint);

  const MatrixXd& M() const { return M_; }
  const VectorXd& c() const { return c_; }

  VectorXd partial_gradient(int i, const VectorXd& profile) const override;
  VectorXd pseudo_gradient(const VectorXd& x) const override;
  nlohmann::json to_json() const override;

 private:
  MatrixXd M_;
  VectorXd c_;
};

/// Nash-Cournot market game: firm i pays x_i^T Q_i x_i + q_i^T x_i and earns
/// p(Ax)^T A_i x_i with linear inverse demand p(y) = intercept - slope .* y.
class CournotGame final : public Game {
 public:
  CournotGame(Dims dims, std::vector<VectorXd> Q_diag, std::vector<VectorXd> q,
              VectorXd price_intercept, VectorXd price_slope,
              CoupledConstraint constraint);

  const std::vector<VectorXd>& Q_diag() const { return Q_diag_; }
  const std::vector<VectorXd>& q() const { return q_; }
  const VectorXd& price_intercept() const { return price_intercept_; }
  const VectorXd& price_slope() const { return price_slope_; }

  double cost(int i, const VectorXd& profile) const;
  VectorXd partial_gradient(int i, const VectorXd& profile) const override;
  nlohmann::json to_json() const override;

 private:
  std::vector<VectorXd> Q_diag_;
  std::vector<VectorXd> q_;
  VectorXd price_intercept_;
  VectorXd price_slope_;
};

inline VectorXd cournot_partial_gradient(const CournotGame& game, int i,
                                         const VectorXd& profile) {
  return game.partial_gradient(i, profile);
}

AffineGame affine_from_cournot(const CournotGame& game);

struct MonotonicityConstants {
  double mu = 0.0;  // lambda_min of the symmetric part of M
  double L = 0.0;   // max_i ||M_i|| over the block rows of M
  double L_full = 0.0;  // ||M||, the Lipschitz constant of F itself
};

/// Throws NotStronglyMonotone when lambda_min((M + M^T)/2) <= 1e-12.
MonotonicityConstants monotonicity_constants(const AffineGame& game);

/// Players minimise (x_i - target_i)^2 subject to sum_i x_i <= sum_i b_i,
/// with scalar decisions and A_i = [1].
AffineGame scalar_quadratic_game(const VectorXd& targets,
                                 const VectorXd& b_blocks);

struct RandomAffineSpec {
  int players = 3;
  int m = 1;
  int max_block = 3;  // n_i drawn from [m, max(m, max_block)]
  double coupling = 0.3;  // scale of the skew and cross terms
};

/// Random affine game satisfying the standing assumptions: symmetric part of
/// M positive definite, each A_i of full row rank and a nonempty polyhedron.
AffineGame random_affine_game(const RandomAffineSpec& spec, Rng& rng);

nlohmann::json constraint_to_json(const CoupledConstraint& constraint);
std::unique_ptr<Game> game_from_json(const nlohmann::json& doc);

}  // namespace gnelin
