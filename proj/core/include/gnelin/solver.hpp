#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gnelin/game.hpp"
#include "gnelin/rng.hpp"
#include "gnelin/topology.hpp"

namespace gnelin {

/// Local variables of one player.
struct PlayerState {
  VectorXd est;          // n: own decision in block i, estimates of the rest
  VectorXd v;            // m: auxiliary dual variable
  VectorXd lambda;       // m: local copy of the multiplier
  VectorXd lambda_prev;  // m: multiplier of the previous round
  VectorXd x_prev;       // n_i: own decision of the previous round
};

enum class InitMode { Zeros, SeededRandom, FeasibleConsistent };
enum class Form { Decentralized, SemiCentralized };

std::string to_string(InitMode mode);
std::string to_string(Form form);
InitMode init_mode_from_string(const std::string& s);
Form form_from_string(const std::string& s);

struct SolverConfig {
  double alpha = 1e-2;
  double beta = 0.1;
  double gamma = 0.1;
  int max_iters = 1000;
  /// Stop once max(consensus error, dual spread, displacement) <= stop_tol.
  /// A non-finite value disables the rule and runs exactly max_iters rounds.
  double stop_tol = std::numeric_limits<double>::infinity();
  InitMode init = InitMode::FeasibleConsistent;
  Form form = Form::Decentralized;
  std::uint64_t seed = 0;
};

/// Whole-network state. `y` (m x N, column i belongs to player i) is only
/// advanced by the semi-centralized form; it stays zero otherwise.
struct SolverState {
  std::vector<PlayerState> players;
  MatrixXd y;
  int iteration = 0;
};

/// What a player broadcasts to its neighbours each round. The multiplier is
/// sent as the one-round difference lambda - lambda_prev, which is all the
/// neighbours' auxiliary update consumes.
struct Message {
  VectorXd est;
  VectorXd v;
  VectorXd lambda_delta;
};

SolverState initialize(const Game& game, const Topology& topology,
                       const SolverConfig& config, Rng& rng);

std::vector<Message> publish(const SolverState& state);

/// New own decision: consensus over the neighbours' copies of block i, minus
/// a gradient step on the player's own copy and the multiplier correction.
VectorXd local_primal_update(const Game& game, const Topology& topology, int i,
                             const PlayerState& self,
                             std::span<const Message> inbox, double alpha);

/// New estimates of every other player's block (length n - n_i).
VectorXd estimate_mix(const Dims& dims, const Topology& topology, int i,
                      std::span<const Message> inbox);

VectorXd aux_dual_update(const Game& game, const Topology& topology, int i,
                         const PlayerState& self,
                         std::span<const Message> inbox, double beta,
                         double gamma, const VectorXd& x_next);

VectorXd project_dual(const VectorXd& v);

/// One synchronous round of the fully decentralized iteration. Every player
/// reads the same round-k snapshot, so `order` (a permutation of players)
/// cannot change the result; it exists to let tests prove that.
SolverState synchronous_round(const SolverState& state, const Game& game,
                              const Topology& topology,
                              const SolverConfig& config,
                              std::span<const int> order = {});

/// One round of the reference iteration that keeps the global variable y and
/// applies B directly, written with stacked Kronecker algebra.
SolverState semi_centralized_round(const SolverState& state, const Game& game,
                                   const Topology& topology,
                                   const SolverConfig& config);

/// Stationary point of both iterations built from a variational GNE.
struct FixedPoint {
  VectorXd x_star;
  VectorXd lambda_star;
  VectorXd v_star;
  MatrixXd y_star;  // m x N, in the range of B
  double beta = 0.0;
};

/// Throws InconsistentKKT when (x*, lambda*) is not a KKT pair within 1e-8 and
/// RangeSpaceMiss when the y* equation has no solution within 1e-8.
FixedPoint fixed_point_from_solution(const Game& game, const Topology& topology,
                                     const VectorXd& x_star,
                                     const VectorXd& lambda_star, double beta);

/// Network state sitting exactly at the fixed point.
SolverState lifted_state(const FixedPoint& fp, const Dims& dims);

/// Weighted error sum E of the convergence certificate. Throws WeightNotPD if
/// either weight matrix is not positive definite for these stepsizes.
double lyapunov_value(const SolverState& state, const FixedPoint& fp,
                      const Game& game, const Topology& topology, double alpha,
                      double beta, double gamma);

struct TrajectoryRecord {
  int iter = 0;
  VectorXd x;  // stacked true decisions
  double consensus_error = 0.0;
  double dual_spread = 0.0;
  double constraint_violation = 0.0;
  double kkt_residual = 0.0;
  double displacement = 0.0;
  std::optional<double> dist_to_star;
  std::optional<double> lyapunov_E;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  SolverState final_state;
  bool stopped_early = false;
};

using RecordObserver = std::function<void(const TrajectoryRecord&)>;

/// Runs up to max_iters rounds of the configured form. With a reference fixed
/// point the records also carry dist_to_star and, for the semi-centralized
/// form, the Lyapunov value. Throws NonFinite on divergence; records produced
/// before the failure have already been passed to `observer`.
Trajectory run(const Game& game, const Topology& topology,
               const SolverConfig& config, const FixedPoint* reference = nullptr,
               const RecordObserver& observer = {});

/// Same, starting from a given state (resume or custom initialisation).
Trajectory run_from(SolverState state, const Game& game,
                    const Topology& topology, const SolverConfig& config,
                    const FixedPoint* reference = nullptr,
                    const RecordObserver& observer = {});

nlohmann::json state_to_json(const SolverState& state);
SolverState state_from_json(const nlohmann::json& doc, const Dims& dims);

}  // namespace gnelin
