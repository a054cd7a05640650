// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gnelin/error.hpp"
#include "gnelin/experiment.hpp"
#include "gnelin/rate_fit.hpp"
#include "gnelin/solver.hpp"
#include "gnelin/stepsize.hpp"
#include "gnelin/trajectory_io.hpp"
#include "gnelin/vi_oracle.hpp"
#include "oracles.hpp"

using namespace gnelin;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

VectorXd own_decisions(const SolverState& s, const Dims& d) {
  VectorXd x(d.n);
  for (int i = 0; i < d.players; ++i)
    x.segment(d.offset(i), d.size(i)) =
        s.players[static_cast<std::size_t>(i)].est.segment(d.offset(i), d.size(i));
  return x;
}

double max_lambda_error(const SolverState& s, const VectorXd& lambda_star) {
  double e = 0.0;
  for (const auto& p : s.players)
    e = std::max(e, (p.lambda - lambda_star).lpNorm<Eigen::Infinity>());
  return e;
}

VectorXd mean_lambda(const SolverState& s) {
  VectorXd l = VectorXd::Zero(s.players.front().lambda.size());
  for (const auto& p : s.players) l += p.lambda;
  return l / static_cast<double>(s.players.size());
}

double state_gap(const SolverState& a, const SolverState& b) {
  double gap = a.y.size() ? (a.y - b.y).cwiseAbs().maxCoeff() : 0.0;
  for (std::size_t i = 0; i < a.players.size(); ++i) {
    const auto& p = a.players[i];
    const auto& q = b.players[i];
    gap = std::max({gap, (p.est - q.est).cwiseAbs().maxCoeff(),
                    (p.v - q.v).cwiseAbs().maxCoeff(),
                    (p.lambda - q.lambda).cwiseAbs().maxCoeff(),
                    (p.lambda_prev - q.lambda_prev).cwiseAbs().maxCoeff(),
                    (p.x_prev - q.x_prev).cwiseAbs().maxCoeff()});
  }
  return gap;
}

/// Metropolis weights, made lazy when they average in one step (sigma = 0).
Topology connected_topology(int n, Rng& rng) {
  const Adjacency adj = random_connected_graph(n, 0.4, rng);
  Topology t = make_topology(adj);
  if (t.sigma > 1e-12) return t;
  const MatrixXd lazy = 0.5 * (MatrixXd::Identity(n, n) + t.W);
  return make_topology(adj, lazy);
}

SolverConfig certified_config(const AffineGame& g, const Topology& t) {
  const ResolvedStepsizes s =
      resolve_stepsizes(parse_stepsizes("certified"), make_theory_constants(g, t));
  SolverConfig c;
  c.alpha = s.alpha;
  c.beta = s.beta;
  c.gamma = s.gamma;
  return c;
}

Outcome closed_form_fixture() {
  const auto t0 = Clock::now();
  const AffineGame g = fixture::two_player();
  const Topology t = fixture::two_node_lazy();
  const VIProblem p = make_vi_problem(g);
  const VectorXd x_exact = Eigen::Vector2d(2.5, 1.5);
  const VectorXd lambda_exact = VectorXd::Constant(1, 1.0);
  const VISolution sol = solve_vi(p);
  const VectorXd lam = recover_multiplier(p, sol.x_star);
  const double oracle_x = (sol.x_star - x_exact).lpNorm<Eigen::Infinity>();
  const double oracle_l = (lam - lambda_exact).lpNorm<Eigen::Infinity>();
  const double kkt = kkt_residual(p, sol.x_star, lam).residual;

  SolverConfig c = certified_config(g, t);
  const Contraction k = contraction_factor(make_theory_constants(g, t), c.alpha, c.beta, c.gamma);
  c.form = Form::Decentralized;
  c.max_iters = 50000;
  c.stop_tol = 1e-13;
  const Trajectory tr = run(g, t, c);
  const double x_err =
      (own_decisions(tr.final_state, g.dims()) - x_exact).lpNorm<Eigen::Infinity>();
  const double l_err = max_lambda_error(tr.final_state, lambda_exact);
  const double secs = seconds_since(t0);
  const bool pass = oracle_x <= 1e-12 && oracle_l <= 1e-12 && kkt <= 1e-12 &&
                    k.certified && x_err <= 1e-6 && l_err <= 1e-6 &&
                    tr.final_state.iteration <= 50000 && secs < 5.0;
  return {pass, fmt("oracle |x-x*|=%.1e |lam-lam*|=%.1e kkt=%.1e; solver iters=%d "
                    "|x-x*|=%.1e max|lam_i-lam*|=%.1e certified=%d %.2fs",
                    oracle_x, oracle_l, kkt, tr.final_state.iteration, x_err, l_err,
                    int(k.certified), secs)};
}

Outcome contraction_certificate() {
  const auto t0 = Clock::now();
  const AffineGame g = fixture::five_player();
  const Topology t = fixture::ring5();
  const TheoryConstants k = make_theory_constants(g, t);
  const double sigma_ref = oracle::ring_sigma(5);
  SolverConfig c = certified_config(g, t);
  c.form = Form::SemiCentralized;
  c.max_iters = 2000;
  const Contraction ctr = contraction_factor(k, c.alpha, c.beta, c.gamma);

  const OracleSolution o = solve_oracle(g);
  const FixedPoint fp = fixed_point_from_solution(g, t, o.x_star, o.lambda_star, c.beta);
  Rng rng(c.seed);
  SolverState s = initialize(g, t, c, rng);
  double e_prev = lyapunov_value(s, fp, g, t, c.alpha, c.beta, c.gamma);
  double worst = 0.0;
  int violations = 0;
  for (int it = 0; it < 2000; ++it) {
    s = semi_centralized_round(s, g, t, c);
    const double e = lyapunov_value(s, fp, g, t, c.alpha, c.beta, c.gamma);
    if (e_prev > 0.0) worst = std::max(worst, e / e_prev);
    if (e > ctr.a * e_prev * (1.0 + 1e-10)) ++violations;
    e_prev = e;
  }
  const double secs = seconds_since(t0);
  const bool pass = std::abs(k.sigma - 0.5387) <= 1e-3 &&
                    std::abs(k.sigma - sigma_ref) <= 1e-12 && k.mu == 2.0 && k.L == 2.0 &&
                    ctr.certified && ctr.a > 0.0 && ctr.a < 1.0 && violations == 0 &&
                    secs < 10.0;
  return {pass, fmt("sigma=%.6f a=%.9f worst E ratio=%.9f violations=%d %.2fs", k.sigma,
                    ctr.a, worst, violations, secs)};
}

Outcome form_equivalence() {
  Rng rng(301);
  double worst_x = 0.0;
  double worst_l = 0.0;
  int short_runs = 0;
  for (int inst = 0; inst < 10; ++inst) {
    RandomAffineSpec spec;
    spec.players = 2 + static_cast<int>(rng.below(7));
    spec.m = 1 + static_cast<int>(rng.below(3));
    const AffineGame g = random_affine_game(spec, rng);
    const Topology t = make_topology(random_connected_graph(spec.players, 0.4, rng));
    SolverConfig c;
    c.alpha = 0.5 / monotonicity_constants(g).L_full;
    c.beta = 0.1;
    c.gamma = 0.1;
    c.max_iters = 200;
    c.seed = rng.next_u64();
    const FormComparison cmp = compare_forms(g, t, c);
    if (cmp.iterations != 200) ++short_runs;
    worst_x = std::max(worst_x, cmp.max_rel_dev_x);
    worst_l = std::max(worst_l, cmp.max_rel_dev_lambda);
  }
  const bool pass = short_runs == 0 && worst_x <= 1e-9 && worst_l <= 1e-9;
  return {pass, fmt("10 instances, 200 rounds: max rel dev x=%.2e lambda=%.2e", worst_x,
                    worst_l)};
}

Outcome alpha_bound_check() {
  Rng rng(401);
  int failures = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    TheoryConstants k;
    k.L = rng.uniform(0.1, 10.0);
    k.mu = rng.uniform(1e-3, 1.0) * k.L;
    k.sigma = 0.95 * (1.0 - rng.uniform01());  // (0, 0.95]
    k.N = 2 + static_cast<int>(rng.below(200));
    k.lam_max_PiTPi = 1.0;
    k.lam_min_PiPiT = 1.0;
    const double rho = rho_m_alpha(k, 0.99 * alpha_bound(k).value);
    worst = std::max(worst, rho);
    if (!(rho < 1.0) || rho_m_alpha(k, 0.0) != 1.0) ++failures;
  }
  return {failures == 0,
          fmt("1000 tuples: max rho(M_alpha)=%.12f, failures=%d", worst, failures)};
}

Outcome oracle_equivalence() {
  Rng rng(501);
  double worst_x = 0.0;
  double worst_kkt = 0.0;
  long total_iters = 0;
  for (int inst = 0; inst < 20; ++inst) {
    RandomAffineSpec spec;
    spec.players = 2 + static_cast<int>(rng.below(9));
    spec.m = 1 + static_cast<int>(rng.below(3));
    const AffineGame g = random_affine_game(spec, rng);
    const Topology t = connected_topology(spec.players, rng);
    const OracleSolution o = solve_oracle(g);
    SolverConfig c = certified_config(g, t);
    c.max_iters = 2000000;
    c.stop_tol = 1e-12;
    c.seed = rng.next_u64();
    const Trajectory tr = run(g, t, c);
    const VectorXd x = own_decisions(tr.final_state, g.dims());
    const VIProblem p = make_vi_problem(g);
    worst_x = std::max(worst_x, (x - o.x_star).lpNorm<Eigen::Infinity>());
    worst_kkt =
        std::max(worst_kkt, kkt_residual(p, x, mean_lambda(tr.final_state)).residual);
    total_iters += tr.final_state.iteration;
  }
  const bool pass = worst_x <= 1e-5 && worst_kkt <= 1e-5;
  return {pass, fmt("20 games: max |x-x_oracle|=%.2e max kkt=%.2e, %ld rounds total",
                    worst_x, worst_kkt, total_iters)};
}

Outcome gradient_correctness() {
  double worst_fd = 0.0;
  double worst_affine = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.N = 3;
    cfg.m = cfg.n_i = 2;
    const Instance inst = generate_cournot(cfg);
    const auto& g = dynamic_cast<const CournotGame&>(*inst.game);
    const Dims& d = g.dims();
    Rng rng(seed + 1000);
    VectorXd x(d.n);
    for (int k = 0; k < d.n; ++k) x(k) = rng.uniform(-2.0, 2.0);
    for (int i = 0; i < d.players; ++i) {
      auto f = [&](const VectorXd& y) {
        return oracle::cournot_cost(g.constraint().A_blocks, g.Q_diag(), g.q(),
                                    g.price_intercept(), g.price_slope(), i, y);
      };
      const VectorXd fd = oracle::fd_gradient(f, x, d.offset(i), d.size(i));
      const VectorXd an = g.partial_gradient(i, x);
      worst_fd = std::max(worst_fd, (an - fd).lpNorm<Eigen::Infinity>() /
                                        std::max(1.0, an.lpNorm<Eigen::Infinity>()));
    }
    worst_affine = std::max(
        worst_affine,
        (inst.affine->pseudo_gradient(x) - g.pseudo_gradient(x)).lpNorm<Eigen::Infinity>());
  }
  const bool pass = worst_fd <= 1e-6 && worst_affine <= 1e-10;
  return {pass, fmt("100 points: max rel fd gap=%.2e, affine gap=%.2e", worst_fd,
                    worst_affine)};
}

bool tail_nonincreasing(const std::vector<std::optional<double>>& d) {
  const std::size_t start = d.size() / 2;
  for (std::size_t k = start + 1; k < d.size(); ++k)
    if (!d[k] || !d[k - 1] || *d[k] > *d[k - 1]) return false;
  return true;
}

Outcome desk_scale() {
  const fs::path root = fs::temp_directory_path() / "gnelin_acceptance";
  fs::remove_all(root);

  ExperimentConfig desk;
  desk.stepsizes = parse_stepsizes("certified,0.1,0.1");
  desk.out_dir = (root / "desk").string();
  const ExperimentResult r = run_experiment(desk);
  const auto& fit = r.report["rate_fit"];
  const bool desk_ok = !fit.is_null() && fit["r_squared"].get<double>() >= 0.99 &&
                       fit["rate"].get<double>() < 1.0;

  ExperimentConfig full = desk;
  full.apply_full_scale();
  full.max_iters = 5000;
  full.out_dir = (root / "full").string();
  const auto t0 = Clock::now();
  const ExperimentResult fr = run_experiment(full);
  const double secs = seconds_since(t0);
  const CsvTable table = read_csv_file(fr.csv_path);
  const auto dist = table.column("dist_to_star");
  const bool full_ok = fr.report["final"]["iterations"] == 5000 && secs < 60.0 &&
                       tail_nonincreasing(dist);
  return {desk_ok && full_ok,
          fmt("desk R2=%.5f rate=%.8f; full N=50 5000 rounds %.2fs monotone tail=%d",
              fit.is_null() ? 0.0 : fit["r_squared"].get<double>(),
              fit.is_null() ? 1.0 : fit["rate"].get<double>(), secs,
              int(tail_nonincreasing(dist)))};
}

Outcome fixed_point_stationarity() {
  struct Case {
    AffineGame game;
    Topology topo;
  };
  std::vector<Case> cases{{fixture::two_player(), fixture::two_node_lazy()},
                          {fixture::two_player(5.0), fixture::two_node_lazy()},
                          {fixture::five_player(), fixture::ring5()}};
  Rng rng(801);
  for (int k = 0; k < 5; ++k) {
    RandomAffineSpec spec;
    spec.players = 3 + static_cast<int>(rng.below(5));
    spec.m = 1 + static_cast<int>(rng.below(3));
    AffineGame g = random_affine_game(spec, rng);
    cases.push_back({g, make_topology(random_connected_graph(spec.players, 0.4, rng))});
  }
  double worst = 0.0;
  for (const auto& cs : cases) {
    SolverConfig c;
    c.alpha = 0.5 / monotonicity_constants(cs.game).L_full;
    const OracleSolution o = solve_oracle(cs.game);
    const FixedPoint fp =
        fixed_point_from_solution(cs.game, cs.topo, o.x_star, o.lambda_star, c.beta);
    const SolverState s = lifted_state(fp, cs.game.dims());
    worst = std::max({worst, state_gap(synchronous_round(s, cs.game, cs.topo, c), s),
                      state_gap(semi_centralized_round(s, cs.game, cs.topo, c), s)});
  }
  return {worst <= 1e-10,
          fmt("%zu fixtures, both forms: max state movement=%.2e", cases.size(), worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closed-form fixture", closed_form_fixture},
      {"contraction certificate", contraction_certificate},
      {"form equivalence", form_equivalence},
      {"alpha bound keeps rho below one", alpha_bound_check},
      {"oracle equivalence", oracle_equivalence},
      {"gradient correctness", gradient_correctness},
      {"desk and full scale markets", desk_scale},
      {"fixed-point stationarity", fixed_point_stationarity},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", index, name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
