#include "gnelin/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gnelin/error.hpp"
#include "gnelin/vi_oracle.hpp"

namespace gnelin {

namespace {

constexpr double kFixedPointTol = 1e-8;

void check_shapes(const Game& game, const Topology& topology) {
  require(game.dims().players == topology.n, Errc::DimensionMismatch,
          "game has " + std::to_string(game.dims().players) +
              " players but the topology has " + std::to_string(topology.n) +
              " nodes");
}

void check_state(const SolverState& state, const Dims& d) {
  require(static_cast<int>(state.players.size()) == d.players,
          Errc::DimensionMismatch, "state has the wrong number of players");
  for (int i = 0; i < d.players; ++i) {
    const auto& p = state.players[static_cast<std::size_t>(i)];
    require(p.est.size() == d.n && p.v.size() == d.m &&
                p.lambda.size() == d.m && p.lambda_prev.size() == d.m &&
                p.x_prev.size() == d.size(i),
            Errc::DimensionMismatch,
            "player " + std::to_string(i) + " state has the wrong shape");
  }
}

VectorXd mixed_copy(const Topology& topology, int i,
                    std::span<const Message> inbox) {
  VectorXd acc = VectorXd::Zero(inbox[static_cast<std::size_t>(i)].est.size());
  for (int j : topology.neighbors[static_cast<std::size_t>(i)])
    acc += topology.W(i, j) * inbox[static_cast<std::size_t>(j)].est;
  return acc;
}

MatrixXd copies_of(const SolverState& s) {
  const auto N = static_cast<Eigen::Index>(s.players.size());
  MatrixXd X(s.players.front().est.size(), N);
  for (Eigen::Index i = 0; i < N; ++i)
    X.col(i) = s.players[static_cast<std::size_t>(i)].est;
  return X;
}

MatrixXd lambdas_of(const SolverState& s) {
  const auto N = static_cast<Eigen::Index>(s.players.size());
  MatrixXd Lam(s.players.front().lambda.size(), N);
  for (Eigen::Index i = 0; i < N; ++i)
    Lam.col(i) = s.players[static_cast<std::size_t>(i)].lambda;
  return Lam;
}

/// Column i holds A_i x_i - b_i.
MatrixXd local_slacks(const Game& game, const VectorXd& x) {
  const Dims& d = game.dims();
  const auto& con = game.constraint();
  MatrixXd out(d.m, d.players);
  for (int i = 0; i < d.players; ++i)
    out.col(i) = con.A_blocks[static_cast<std::size_t>(i)] *
                     x.segment(d.offset(i), d.size(i)) -
                 con.b_blocks[static_cast<std::size_t>(i)];
  return out;
}

VectorXd own_decisions(const SolverState& s, const Dims& d) {
  VectorXd x(d.n);
  for (int i = 0; i < d.players; ++i)
    x.segment(d.offset(i), d.size(i)) =
        s.players[static_cast<std::size_t>(i)].est.segment(d.offset(i), d.size(i));
  return x;
}

bool state_finite(const SolverState& s) {
  for (const auto& p : s.players)
    if (!p.est.allFinite() || !p.v.allFinite() || !p.lambda.allFinite())
      return false;
  return s.y.allFinite();
}

/// Pseudo-inverse of a symmetric PSD matrix restricted to its range.
MatrixXd psd_pinv(const MatrixXd& B) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(B);
  const VectorXd& ev = es.eigenvalues();
  const double thr = 1e-9 * ev.cwiseAbs().maxCoeff();
  VectorXd inv = VectorXd::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (std::abs(ev(k)) > thr) inv(k) = 1.0 / ev(k);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

VIProblem pseudo_gradient_problem(const Game& game) {
  VIProblem p;
  p.F = [&game](const VectorXd& x) { return game.pseudo_gradient(x); };
  p.constraint = game.constraint();
  return p;
}

}  // namespace

std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::Zeros: return "zeros";
    case InitMode::SeededRandom: return "seeded-random";
    case InitMode::FeasibleConsistent: return "feasible-consistent";
  }
  return "unknown";
}

std::string to_string(Form form) {
  return form == Form::Decentralized ? "decentralized" : "semi_centralized";
}

InitMode init_mode_from_string(const std::string& s) {
  if (s == "zeros") return InitMode::Zeros;
  if (s == "seeded-random") return InitMode::SeededRandom;
  if (s == "feasible-consistent") return InitMode::FeasibleConsistent;
  fail(Errc::InvalidConfig, "unknown init mode \"" + s + "\"");
}

Form form_from_string(const std::string& s) {
  if (s == "decentralized") return Form::Decentralized;
  if (s == "semi_centralized" || s == "semi-centralized")
    return Form::SemiCentralized;
  fail(Errc::InvalidConfig, "unknown solver form \"" + s + "\"");
}

SolverState initialize(const Game& game, const Topology& topology,
                       const SolverConfig& config, Rng& rng) {
  check_shapes(game, topology);
  require(config.alpha > 0.0 && config.beta > 0.0 && config.gamma > 0.0,
          Errc::InvalidConfig, "stepsizes must be positive");
  require(config.max_iters >= 1, Errc::InvalidConfig, "max_iters must be >= 1");
  const Dims& d = game.dims();
  const auto& con = game.constraint();

  SolverState s;
  s.players.resize(static_cast<std::size_t>(d.players));
  s.y = MatrixXd::Zero(d.m, d.players);
  // Draw order: player by player, estimate entries in index order, then the
  // multiplier entries.
  for (int i = 0; i < d.players; ++i) {
    auto& p = s.players[static_cast<std::size_t>(i)];
    const VectorXd x_minus1 = min_norm_solution(
        con.A_blocks[static_cast<std::size_t>(i)],
        con.b_blocks[static_cast<std::size_t>(i)]);
    p.v = VectorXd::Zero(d.m);
    p.lambda_prev = VectorXd::Zero(d.m);
    p.x_prev = x_minus1;
    p.est = VectorXd::Zero(d.n);
    p.lambda = VectorXd::Zero(d.m);
    switch (config.init) {
      case InitMode::Zeros:
        break;
      case InitMode::SeededRandom:
        for (int r = 0; r < d.n; ++r) p.est(r) = rng.uniform(-1.0, 1.0);
        for (int r = 0; r < d.m; ++r) p.lambda(r) = rng.uniform(0.0, 1.0);
        break;
      case InitMode::FeasibleConsistent:
        for (int r = 0; r < d.n; ++r) {
          const bool own = r >= d.offset(i) && r < d.offset(i) + d.size(i);
          if (!own) p.est(r) = rng.uniform(-1.0, 1.0);
        }
        p.est.segment(d.offset(i), d.size(i)) = x_minus1;
        for (int r = 0; r < d.m; ++r) p.lambda(r) = rng.uniform(0.0, 1.0);
        break;
    }
  }
  return s;
}

std::vector<Message> publish(const SolverState& state) {
  std::vector<Message> out;
  out.reserve(state.players.size());
  for (const auto& p : state.players)
    out.push_back({p.est, p.v, p.lambda - p.lambda_prev});
  return out;
}

VectorXd local_primal_update(const Game& game, const Topology& topology, int i,
                             const PlayerState& self,
                             std::span<const Message> inbox, double alpha) {
  const Dims& d = game.dims();
  require(static_cast<int>(inbox.size()) == d.players && self.est.size() == d.n,
          Errc::DimensionMismatch, "inbox or state does not match dims");
  const VectorXd mixed = mixed_copy(topology, i, inbox);
  const auto& Ai = game.constraint().A_blocks[static_cast<std::size_t>(i)];
  return mixed.segment(d.offset(i), d.size(i)) -
         alpha * game.partial_gradient(i, self.est) -
         alpha * Ai.transpose() * self.lambda;
}

VectorXd estimate_mix(const Dims& dims, const Topology& topology, int i,
                      std::span<const Message> inbox) {
  require(static_cast<int>(inbox.size()) == dims.players,
          Errc::DimensionMismatch, "inbox does not match dims");
  return select_others(dims, i, mixed_copy(topology, i, inbox));
}

VectorXd aux_dual_update(const Game& game, const Topology& topology, int i,
                         const PlayerState& self,
                         std::span<const Message> inbox, double beta,
                         double gamma, const VectorXd& x_next) {
  const Dims& d = game.dims();
  require(x_next.size() == d.size(i) && self.v.size() == d.m,
          Errc::DimensionMismatch, "aux_dual_update operand mismatch");
  VectorXd gossip_v = VectorXd::Zero(d.m);
  VectorXd gossip_delta = VectorXd::Zero(d.m);
  for (int j : topology.neighbors[static_cast<std::size_t>(i)]) {
    const double c = topology.C(i, j);
    gossip_v += c * inbox[static_cast<std::size_t>(j)].v;
    gossip_delta += c * inbox[static_cast<std::size_t>(j)].lambda_delta;
  }
  const auto& Ai = game.constraint().A_blocks[static_cast<std::size_t>(i)];
  const VectorXd x_now = self.est.segment(d.offset(i), d.size(i));
  return self.v - gamma * gossip_v - gossip_delta +
         (self.lambda - self.lambda_prev) + beta * Ai * (x_next - x_now);
}

VectorXd project_dual(const VectorXd& v) { return v.cwiseMax(0.0); }

SolverState synchronous_round(const SolverState& state, const Game& game,
                              const Topology& topology,
                              const SolverConfig& config,
                              std::span<const int> order) {
  const Dims& d = game.dims();
  check_shapes(game, topology);
  check_state(state, d);
  const std::vector<Message> inbox = publish(state);

  std::vector<int> default_order;
  if (order.empty()) {
    default_order.resize(static_cast<std::size_t>(d.players));
    std::iota(default_order.begin(), default_order.end(), 0);
    order = default_order;
  }
  require(static_cast<int>(order.size()) == d.players, Errc::DimensionMismatch,
          "update order must list every player once");

  SolverState next;
  next.players.resize(state.players.size());
  next.y = state.y;
  next.iteration = state.iteration + 1;
  std::vector<char> done(state.players.size(), 0);
  for (int i : order) {
    require(i >= 0 && i < d.players && !done[static_cast<std::size_t>(i)],
            Errc::DimensionMismatch, "update order is not a permutation");
    done[static_cast<std::size_t>(i)] = 1;
    const auto& self = state.players[static_cast<std::size_t>(i)];
    auto& out = next.players[static_cast<std::size_t>(i)];

    const VectorXd x_next =
        local_primal_update(game, topology, i, self, inbox, config.alpha);
    const VectorXd others = estimate_mix(d, topology, i, inbox);
    const VectorXd v_next = aux_dual_update(game, topology, i, self, inbox,
                                            config.beta, config.gamma, x_next);
    out.est = merge_blocks(d, i, x_next, others);
    out.v = v_next;
    out.lambda = project_dual(v_next);
    out.lambda_prev = self.lambda;
    out.x_prev = self.est.segment(d.offset(i), d.size(i));
  }
  return next;
}

SolverState semi_centralized_round(const SolverState& state, const Game& game,
                                   const Topology& topology,
                                   const SolverConfig& config) {
  const Dims& d = game.dims();
  check_shapes(game, topology);
  check_state(state, d);
  require(state.y.rows() == d.m && state.y.cols() == d.players,
          Errc::DimensionMismatch, "y must be m x N");
  const auto& con = game.constraint();

  // Column i of X is player i's copy; right-multiplying by W applies W (x) I_n
  // to the stacked vector, and likewise B, C act on the m x N duals.
  const MatrixXd X = copies_of(state);
  const MatrixXd Lam = lambdas_of(state);
  const ExtendedProfile profile{X};
  const VectorXd F = game.extended_pseudo_gradient(profile);
  const VectorXd PiT_lambda = [&] {
    VectorXd out(d.n);
    for (int i = 0; i < d.players; ++i)
      out.segment(d.offset(i), d.size(i)) =
          con.A_blocks[static_cast<std::size_t>(i)].transpose() * Lam.col(i);
    return out;
  }();

  MatrixXd X_next = X * topology.W;
  for (int i = 0; i < d.players; ++i)
    X_next.col(i).segment(d.offset(i), d.size(i)) -=
        config.alpha * (F.segment(d.offset(i), d.size(i)) +
                        PiT_lambda.segment(d.offset(i), d.size(i)));

  SolverState next;
  next.players.resize(state.players.size());
  next.iteration = state.iteration + 1;
  for (int i = 0; i < d.players; ++i)
    next.players[static_cast<std::size_t>(i)].est = X_next.col(i);
  const VectorXd x_next = own_decisions(next, d);

  const MatrixXd V_next = Lam - Lam * topology.C +
                          config.beta * local_slacks(game, x_next) +
                          state.y * topology.B;
  next.y = state.y - config.gamma * V_next * topology.B;
  for (int i = 0; i < d.players; ++i) {
    auto& out = next.players[static_cast<std::size_t>(i)];
    const auto& self = state.players[static_cast<std::size_t>(i)];
    out.v = V_next.col(i);
    out.lambda = project_dual(out.v);
    out.lambda_prev = self.lambda;
    out.x_prev = self.est.segment(d.offset(i), d.size(i));
  }
  return next;
}

FixedPoint fixed_point_from_solution(const Game& game, const Topology& topology,
                                     const VectorXd& x_star,
                                     const VectorXd& lambda_star, double beta) {
  check_shapes(game, topology);
  const Dims& d = game.dims();
  const auto& con = game.constraint();
  require(x_star.size() == d.n && lambda_star.size() == d.m,
          Errc::DimensionMismatch, "x* or lambda* has the wrong length");

  const KKTReport kkt =
      kkt_residual(pseudo_gradient_problem(game), x_star, lambda_star);
  require(kkt.residual <= kFixedPointTol, Errc::InconsistentKKT,
          "KKT residual of the supplied pair is " + std::to_string(kkt.residual));

  FixedPoint fp;
  fp.x_star = x_star;
  fp.lambda_star = lambda_star;
  fp.beta = beta;
  fp.v_star = lambda_star + (beta / d.players) * (con.A * x_star - con.b);

  const MatrixXd V = fp.v_star.replicate(1, d.players);
  const MatrixXd Lam = lambda_star.replicate(1, d.players);
  const MatrixXd rhs = V - Lam - beta * local_slacks(game, x_star);
  // Solving Y B = rhs through the pseudo-inverse keeps Y in range(B).
  fp.y_star = rhs * psd_pinv(topology.B);
  const double miss = (fp.y_star * topology.B - rhs).cwiseAbs().maxCoeff();
  require(miss <= kFixedPointTol, Errc::RangeSpaceMiss,
          "y* equation residual " + std::to_string(miss));

  // Remaining fixed-point conditions: consensus, B v* = 0, lambda* = P[v*].
  const double bv = (V * topology.B).cwiseAbs().maxCoeff();
  const double proj = (project_dual(fp.v_star) - lambda_star).cwiseAbs().maxCoeff();
  require(bv <= kFixedPointTol && proj <= kFixedPointTol, Errc::InconsistentKKT,
          "fixed point conditions fail (B v* " + std::to_string(bv) +
              ", projection " + std::to_string(proj) + ")");
  return fp;
}

SolverState lifted_state(const FixedPoint& fp, const Dims& d) {
  SolverState s;
  s.players.resize(static_cast<std::size_t>(d.players));
  for (int i = 0; i < d.players; ++i) {
    auto& p = s.players[static_cast<std::size_t>(i)];
    p.est = fp.x_star;
    p.v = fp.v_star;
    p.lambda = fp.lambda_star;
    p.lambda_prev = fp.lambda_star;
    p.x_prev = fp.x_star.segment(d.offset(i), d.size(i));
  }
  s.y = fp.y_star;
  return s;
}

double lyapunov_value(const SolverState& state, const FixedPoint& fp,
                      const Game& game, const Topology& topology, double alpha,
                      double beta, double gamma) {
  const Dims& d = game.dims();
  check_state(state, d);
  const auto& con = game.constraint();

  double lam_max_PiTPi = 0.0;
  for (const auto& Ai : con.A_blocks) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Ai * Ai.transpose(),
                                               Eigen::EigenvaluesOnly);
    lam_max_PiTPi = std::max(lam_max_PiTPi, es.eigenvalues().maxCoeff());
  }
  const double x_weight_min = 1.0 - 2.0 * alpha * beta * lam_max_PiTPi;
  const double lam_weight_min =
      1.0 - gamma * topology.lambda_max_B * topology.lambda_max_B;
  require(x_weight_min > 0.0 && lam_weight_min > 0.0, Errc::WeightNotPD,
          "Lyapunov weights are not positive definite for these stepsizes");

  const MatrixXd X_err = copies_of(state) - fp.x_star.replicate(1, d.players);
  const MatrixXd L_err = lambdas_of(state) - fp.lambda_star.replicate(1, d.players);
  const MatrixXd Y_err = state.y - fp.y_star;

  // ||x~||^2 - 2ab ||Pi R x~||^2: R picks each player's own block of its copy.
  double pi_r = 0.0;
  for (int i = 0; i < d.players; ++i)
    pi_r += (con.A_blocks[static_cast<std::size_t>(i)] *
             X_err.col(i).segment(d.offset(i), d.size(i)))
                .squaredNorm();
  const double x_term = X_err.squaredNorm() - 2.0 * alpha * beta * pi_r;
  // ||l~||^2_{I - g B^2} with B^2 = C acting on columns.
  const double lam_term =
      L_err.squaredNorm() - gamma * (L_err * topology.C).cwiseProduct(L_err).sum();
  return x_term + (alpha / beta) * lam_term +
         (alpha / (beta * gamma)) * Y_err.squaredNorm();
}

namespace {

TrajectoryRecord make_record(const SolverState& s, const SolverState* prev,
                             const Game& game, const Topology& topology,
                             const SolverConfig& config,
                             const FixedPoint* reference, bool lyapunov_ok,
                             const VIProblem& kkt_problem) {
  const Dims& d = game.dims();
  TrajectoryRecord r;
  r.iter = s.iteration;
  r.x = own_decisions(s, d);
  const MatrixXd X = copies_of(s);
  const VectorXd mean = X.rowwise().mean();
  r.consensus_error = (X.colwise() - mean).norm();
  const MatrixXd Lam = lambdas_of(s);
  for (int i = 0; i < d.players; ++i)
    for (int j = i + 1; j < d.players; ++j)
      r.dual_spread = std::max(r.dual_spread, (Lam.col(i) - Lam.col(j)).norm());
  r.constraint_violation =
      constraint_residual(game.constraint(), r.x).cwiseMax(0.0).maxCoeff();
  r.kkt_residual =
      kkt_residual(kkt_problem, r.x, Lam.rowwise().mean()).residual;
  if (prev) r.displacement = (r.x - own_decisions(*prev, d)).norm();
  if (reference) {
    r.dist_to_star = (X.colwise() - reference->x_star).norm();
    if (lyapunov_ok)
      r.lyapunov_E = lyapunov_value(s, *reference, game, topology, config.alpha,
                                    config.beta, config.gamma);
  }
  return r;
}

}  // namespace

Trajectory run(const Game& game, const Topology& topology,
               const SolverConfig& config, const FixedPoint* reference,
               const RecordObserver& observer) {
  Rng rng(config.seed);
  return run_from(initialize(game, topology, config, rng), game, topology,
                  config, reference, observer);
}

Trajectory run_from(SolverState state, const Game& game,
                    const Topology& topology, const SolverConfig& config,
                    const FixedPoint* reference, const RecordObserver& observer) {
  check_shapes(game, topology);
  check_state(state, game.dims());
  require(config.max_iters >= 1, Errc::InvalidConfig, "max_iters must be >= 1");

  bool lyapunov_ok = false;
  if (reference && config.form == Form::SemiCentralized) {
    try {
      lyapunov_value(state, *reference, game, topology, config.alpha,
                     config.beta, config.gamma);
      lyapunov_ok = true;
    } catch (const Error& e) {
      if (e.code() != Errc::WeightNotPD) throw;
    }
  }
  const VIProblem kkt_problem = pseudo_gradient_problem(game);

  Trajectory traj;
  auto emit = [&](TrajectoryRecord rec) {
    if (observer) observer(rec);
    traj.records.push_back(std::move(rec));
  };
  emit(make_record(state, nullptr, game, topology, config, reference,
                   lyapunov_ok, kkt_problem));

  const int last = state.iteration + config.max_iters;
  while (state.iteration < last) {
    SolverState next = config.form == Form::Decentralized
                           ? synchronous_round(state, game, topology, config)
                           : semi_centralized_round(state, game, topology, config);
    require(state_finite(next), Errc::NonFinite,
            "state became non-finite at round " + std::to_string(next.iteration) +
                "; the stepsizes are likely too large");
    TrajectoryRecord rec = make_record(next, &state, game, topology, config,
                                       reference, lyapunov_ok, kkt_problem);
    const double metric =
        std::max({rec.consensus_error, rec.dual_spread, rec.displacement});
    state = std::move(next);
    emit(std::move(rec));
    if (std::isfinite(config.stop_tol) && metric <= config.stop_tol) {
      traj.stopped_early = true;
      break;
    }
  }
  traj.final_state = std::move(state);
  return traj;
}

namespace {

nlohmann::json vec_json(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd vec_from(const nlohmann::json& j, Eigen::Index size) {
  const auto vals = j.get<std::vector<double>>();
  require(static_cast<Eigen::Index>(vals.size()) == size, Errc::InvalidConfig,
          "state vector has the wrong length");
  return Eigen::Map<const VectorXd>(vals.data(), size);
}

}  // namespace

nlohmann::json state_to_json(const SolverState& state) {
  nlohmann::json players = nlohmann::json::array();
  for (const auto& p : state.players)
    players.push_back({{"est", vec_json(p.est)},
                       {"v", vec_json(p.v)},
                       {"lambda", vec_json(p.lambda)},
                       {"lambda_prev", vec_json(p.lambda_prev)},
                       {"x_prev", vec_json(p.x_prev)}});
  nlohmann::json y = nlohmann::json::array();
  for (Eigen::Index i = 0; i < state.y.cols(); ++i)
    y.push_back(vec_json(state.y.col(i)));
  return {{"iteration", state.iteration}, {"players", players}, {"y", y}};
}

SolverState state_from_json(const nlohmann::json& doc, const Dims& d) {
  SolverState s;
  s.iteration = doc.at("iteration").get<int>();
  const auto& players = doc.at("players");
  require(static_cast<int>(players.size()) == d.players, Errc::InvalidConfig,
          "snapshot has the wrong number of players");
  s.y = MatrixXd::Zero(d.m, d.players);
  for (int i = 0; i < d.players; ++i) {
    const auto& pj = players[static_cast<std::size_t>(i)];
    PlayerState p;
    p.est = vec_from(pj.at("est"), d.n);
    p.v = vec_from(pj.at("v"), d.m);
    p.lambda = vec_from(pj.at("lambda"), d.m);
    p.lambda_prev = vec_from(pj.at("lambda_prev"), d.m);
    p.x_prev = vec_from(pj.at("x_prev"), d.size(i));
    s.players.push_back(std::move(p));
    if (doc.contains("y"))
      s.y.col(i) = vec_from(doc.at("y")[static_cast<std::size_t>(i)], d.m);
  }
  return s;
}

}  // namespace gnelin
