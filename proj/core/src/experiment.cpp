#include "gnelin/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gnelin/error.hpp"
#include "gnelin/trajectory_io.hpp"

namespace gnelin {

namespace fs = std::filesystem;

namespace {

nlohmann::json range_json(const Range& r) { return {r.lo, r.hi}; }

Range range_from(const nlohmann::json& j, const char* name) {
  require(j.is_array() && j.size() == 2, Errc::InvalidConfig,
          std::string("range '") + name + "' must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

nlohmann::json step_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json("certified");
}

std::optional<double> step_from(const nlohmann::json& j) {
  if (j.is_string()) {
    require(j.get<std::string>() == "certified", Errc::InvalidConfig,
            "stepsize must be a number or \"certified\"");
    return std::nullopt;
  }
  require(j.is_number(), Errc::InvalidConfig,
          "stepsize must be a number or \"certified\"");
  return j.get<double>();
}

std::optional<double> parse_step_token(const std::string& token) {
  if (token == "certified") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    fail(Errc::InvalidConfig, "bad stepsize '" + token + "'");
  }
  require(used == token.size(), Errc::InvalidConfig,
          "bad stepsize '" + token + "'");
  return v;
}

Adjacency build_graph(const TopologySpec& spec, int n, Rng& rng) {
  if (spec.kind == "ring") return ring_graph(n);
  if (spec.kind == "complete") return complete_graph(n);
  if (spec.kind == "random")
    return random_connected_graph(n, spec.edge_probability, rng);
  fail(Errc::InvalidConfig, "unknown topology kind '" + spec.kind + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::Io, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::InvalidConfig, path + ": " + e.what());
  }
}

Topology make_configured_topology(const TopologySpec& spec, int n, Rng& rng) {
  if (spec.kind == "file") {
    Topology t = topology_from_json(read_json_file(spec.path));
    require(t.n == n, Errc::DimensionMismatch,
            "topology file has " + std::to_string(t.n) + " nodes, game has " +
                std::to_string(n));
    return t;
  }
  return make_topology(build_graph(spec, n, rng));
}

SolverConfig solver_config(const ExperimentConfig& c,
                           const ResolvedStepsizes& s) {
  SolverConfig sc;
  sc.alpha = s.alpha;
  sc.beta = s.beta;
  sc.gamma = s.gamma;
  sc.max_iters = c.max_iters;
  sc.stop_tol = c.stop_tol;
  sc.init = c.init;
  sc.form = c.form;
  sc.seed = c.seed;
  return sc;
}

VectorXd stacked_decisions(const SolverState& s, const Dims& d) {
  VectorXd x(d.n);
  for (int i = 0; i < d.players; ++i)
    x.segment(d.offset(i), d.size(i)) =
        s.players[static_cast<std::size_t>(i)].est.segment(d.offset(i), d.size(i));
  return x;
}

VectorXd stacked_multipliers(const SolverState& s, int m) {
  VectorXd l(static_cast<Eigen::Index>(s.players.size()) * m);
  for (std::size_t i = 0; i < s.players.size(); ++i)
    l.segment(static_cast<Eigen::Index>(i) * m, m) = s.players[i].lambda;
  return l;
}

double rel_dev(const VectorXd& a, const VectorXd& b) {
  if (a.size() == 0) return 0.0;
  const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

nlohmann::json vec_json(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

}  // namespace

StepsizeSpec parse_stepsizes(const std::string& text) {
  StepsizeSpec spec;
  if (text == "certified") {
    spec.alpha = spec.beta = spec.gamma = std::nullopt;
    return spec;
  }
  std::vector<std::string> tokens;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) tokens.push_back(tok);
  require(tokens.size() == 3, Errc::InvalidConfig,
          "stepsizes must be 'a,b,g' or 'certified'");
  spec.alpha = parse_step_token(tokens[0]);
  spec.beta = parse_step_token(tokens[1]);
  spec.gamma = parse_step_token(tokens[2]);
  return spec;
}

void ExperimentConfig::apply_full_scale() {
  N = 50;
  m = 5;
  n_i = 5;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {
      {"seed", c.seed},
      {"instance", c.instance},
      {"game_path", c.game_path},
      {"N", c.N},
      {"m", c.m},
      {"n_i", c.n_i},
      {"ranges",
       {{"Q_diag", range_json(c.Q_diag)},
        {"q", range_json(c.q)},
        {"b", range_json(c.b)},
        {"price_intercept", range_json(c.price_intercept)},
        {"price_slope", range_json(c.price_slope)}}},
      {"topology",
       {{"kind", c.topology.kind},
        {"edge_probability", c.topology.edge_probability},
        {"path", c.topology.path}}},
      {"stepsizes",
       {{"alpha", step_json(c.stepsizes.alpha)},
        {"beta", step_json(c.stepsizes.beta)},
        {"gamma", step_json(c.stepsizes.gamma)},
        {"certified_fraction", c.stepsizes.certified_fraction}}},
      {"max_iters", c.max_iters},
      {"stop_tol", finite_or_null(c.stop_tol)},
      {"form", to_string(c.form)},
      {"init", to_string(c.init)},
      {"tail_fraction", c.tail_fraction},
      {"oracle_tol", c.oracle_tol},
      {"out_dir", c.out_dir},
      {"record_timing", c.record_timing},
  };
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  require(doc.is_object(), Errc::InvalidConfig, "config must be a JSON object");
  ExperimentConfig c;
  try {
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("instance")) c.instance = doc["instance"].get<std::string>();
    if (doc.contains("game_path"))
      c.game_path = doc["game_path"].get<std::string>();
    if (doc.contains("N")) c.N = doc["N"].get<int>();
    if (doc.contains("m")) c.m = doc["m"].get<int>();
    if (doc.contains("n_i")) c.n_i = doc["n_i"].get<int>();
    if (doc.contains("ranges")) {
      const auto& r = doc["ranges"];
      if (r.contains("Q_diag")) c.Q_diag = range_from(r["Q_diag"], "Q_diag");
      if (r.contains("q")) c.q = range_from(r["q"], "q");
      if (r.contains("b")) c.b = range_from(r["b"], "b");
      if (r.contains("price_intercept"))
        c.price_intercept = range_from(r["price_intercept"], "price_intercept");
      if (r.contains("price_slope"))
        c.price_slope = range_from(r["price_slope"], "price_slope");
    }
    if (doc.contains("topology")) {
      const auto& t = doc["topology"];
      if (t.contains("kind")) c.topology.kind = t["kind"].get<std::string>();
      if (t.contains("edge_probability"))
        c.topology.edge_probability = t["edge_probability"].get<double>();
      if (t.contains("path")) c.topology.path = t["path"].get<std::string>();
    }
    if (doc.contains("stepsizes")) {
      const auto& s = doc["stepsizes"];
      if (s.is_string()) {
        c.stepsizes = parse_stepsizes(s.get<std::string>());
      } else {
        if (s.contains("alpha")) c.stepsizes.alpha = step_from(s["alpha"]);
        if (s.contains("beta")) c.stepsizes.beta = step_from(s["beta"]);
        if (s.contains("gamma")) c.stepsizes.gamma = step_from(s["gamma"]);
        if (s.contains("certified_fraction"))
          c.stepsizes.certified_fraction = s["certified_fraction"].get<double>();
      }
    }
    if (doc.contains("max_iters")) c.max_iters = doc["max_iters"].get<int>();
    if (doc.contains("stop_tol"))
      c.stop_tol = doc["stop_tol"].is_null()
                       ? std::numeric_limits<double>::infinity()
                       : doc["stop_tol"].get<double>();
    if (doc.contains("form"))
      c.form = form_from_string(doc["form"].get<std::string>());
    if (doc.contains("init"))
      c.init = init_mode_from_string(doc["init"].get<std::string>());
    if (doc.contains("tail_fraction"))
      c.tail_fraction = doc["tail_fraction"].get<double>();
    if (doc.contains("oracle_tol")) c.oracle_tol = doc["oracle_tol"].get<double>();
    if (doc.contains("out_dir")) c.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("record_timing"))
      c.record_timing = doc["record_timing"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::InvalidConfig, std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig c = config_from_json(read_json_file(path));
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
  };
  resolve(c.game_path);
  resolve(c.topology.path);
  return c;
}

void validate_config(const ExperimentConfig& c) {
  auto check_range = [](const Range& r, const char* name) {
    require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo > 0.0 &&
                r.lo <= r.hi,
            Errc::InvalidConfig,
            std::string("range '") + name +
                "' must be a nonempty interval with a positive lower bound");
  };
  require(c.instance == "cournot" || c.instance == "file", Errc::InvalidConfig,
          "instance must be 'cournot' or 'file'");
  if (c.instance == "cournot") {
    require(c.N >= 2, Errc::InvalidConfig, "N must be at least 2");
    require(c.m >= 1, Errc::InvalidConfig, "m must be positive");
    require(c.n_i == c.m, Errc::InvalidConfig,
            "the market instance uses A_i = I_m, so n_i must equal m");
    check_range(c.Q_diag, "Q_diag");
    check_range(c.q, "q");
    check_range(c.b, "b");
    check_range(c.price_intercept, "price_intercept");
    check_range(c.price_slope, "price_slope");
  } else {
    require(!c.game_path.empty(), Errc::InvalidConfig,
            "instance 'file' needs game_path");
  }
  require(c.topology.kind == "ring" || c.topology.kind == "random" ||
              c.topology.kind == "complete" || c.topology.kind == "file",
          Errc::InvalidConfig, "unknown topology kind '" + c.topology.kind + "'");
  require(c.topology.kind != "file" || !c.topology.path.empty(),
          Errc::InvalidConfig, "topology 'file' needs a path");
  require(c.max_iters >= 1, Errc::InvalidConfig, "max_iters must be >= 1");
  require(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0, Errc::InvalidConfig,
          "tail_fraction must lie in (0, 1]");
  require(c.oracle_tol > 0.0, Errc::InvalidConfig, "oracle_tol must be positive");
  const double f = c.stepsizes.certified_fraction;
  require(f > 0.0 && f < 1.0, Errc::InvalidConfig,
          "certified_fraction must lie in (0, 1)");
  for (const auto& s : {c.stepsizes.alpha, c.stepsizes.beta, c.stepsizes.gamma})
    require(!s || (std::isfinite(*s) && *s > 0.0), Errc::InvalidConfig,
            "explicit stepsizes must be positive");
}

std::string config_hash(const ExperimentConfig& config) {
  nlohmann::json j = config_to_json(config);
  j.erase("out_dir");
  j.erase("record_timing");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Instance generate_cournot(const ExperimentConfig& c) {
  validate_config(c);
  require(c.instance == "cournot", Errc::InvalidConfig,
          "generate_cournot needs instance 'cournot'");
  Rng rng(c.seed);
  const Dims dims = Dims::uniform(c.N, c.n_i, c.m);
  auto draw = [&](const Range& r, int k) {
    VectorXd v(k);
    for (int t = 0; t < k; ++t) v(t) = rng.uniform(r.lo, r.hi);
    return v;
  };
  std::vector<VectorXd> Q, q, b;
  for (int i = 0; i < c.N; ++i) {
    Q.push_back(draw(c.Q_diag, c.n_i));
    q.push_back(draw(c.q, c.n_i));
    b.push_back(draw(c.b, c.m));
  }
  const VectorXd intercept = draw(c.price_intercept, c.m);
  const VectorXd slope = draw(c.price_slope, c.m);

  std::vector<MatrixXd> A(static_cast<std::size_t>(c.N),
                          MatrixXd::Identity(c.m, c.n_i));
  CoupledConstraint con = make_constraint(dims, std::move(A), b);
  auto game = std::make_unique<CournotGame>(dims, std::move(Q), std::move(q),
                                            intercept, slope, std::move(con));
  Instance inst;
  inst.topology = make_configured_topology(c.topology, c.N, rng);
  inst.affine = std::make_unique<AffineGame>(affine_from_cournot(*game));
  inst.mono = monotonicity_constants(*inst.affine);
  inst.game = std::move(game);
  return inst;
}

Instance make_instance(const ExperimentConfig& c) {
  if (c.instance == "cournot") return generate_cournot(c);
  validate_config(c);
  Instance inst;
  inst.game = game_from_json(read_json_file(c.game_path));
  if (const auto* cg = dynamic_cast<const CournotGame*>(inst.game.get())) {
    inst.affine = std::make_unique<AffineGame>(affine_from_cournot(*cg));
  } else {
    const auto* ag = dynamic_cast<const AffineGame*>(inst.game.get());
    require(ag != nullptr, Errc::InvalidGame, "unsupported game type");
    inst.affine = std::make_unique<AffineGame>(*ag);
  }
  inst.mono = monotonicity_constants(*inst.affine);
  Rng rng(c.seed);
  inst.topology =
      make_configured_topology(c.topology, inst.game->dims().players, rng);
  return inst;
}

ResolvedStepsizes resolve_stepsizes(const StepsizeSpec& spec,
                                    const TheoryConstants& k) {
  const double f = spec.certified_fraction;
  ResolvedStepsizes s;
  s.alpha = spec.alpha ? *spec.alpha : f * alpha_bound(k).value;
  s.beta = spec.beta ? *spec.beta : f * beta_bound(k, s.alpha).value;
  s.gamma = spec.gamma ? *spec.gamma : f * gamma_bound(k, s.alpha, s.beta).value;
  return s;
}

nlohmann::json certify(const ExperimentConfig& config) {
  const Instance inst = make_instance(config);
  const TheoryConstants k = make_theory_constants(*inst.affine, inst.topology);
  nlohmann::json rep;
  try {
    const ResolvedStepsizes s = resolve_stepsizes(config.stepsizes, k);
    rep = certification_report(k, s.alpha, s.beta, s.gamma);
  } catch (const Error& e) {
    if (e.code() != Errc::DegenerateSigma) throw;
    // A certified beta cannot be derived; report what can be computed.
    const double alpha = config.stepsizes.alpha
                             ? *config.stepsizes.alpha
                             : config.stepsizes.certified_fraction *
                                   alpha_bound(k).value;
    rep["constants"] = to_json(k);
    rep["stepsizes"] = {{"alpha", alpha}, {"beta", nullptr}, {"gamma", nullptr}};
    rep["rho_M_alpha"] = rho_m_alpha(k, alpha);
    rep["beta_terms"] = nullptr;
    rep["gamma_terms"] = nullptr;
    rep["a"] = nullptr;
    rep["certified"] = false;
    rep["error"] = std::string(to_string(e.code()));
    rep["error_detail"] = e.what();
    const Bound ab = alpha_bound(k);
    nlohmann::json terms = nlohmann::json::array();
    for (int i = 0; i < ab.count; ++i)
      terms.push_back(finite_or_null(ab.terms[static_cast<std::size_t>(i)]));
    rep["alpha_terms"] = {{"max", ab.value}, {"terms", terms},
                          {"binding", ab.binding()}};
  }
  rep["config_hash"] = config_hash(config);
  rep["monotonicity"] = {{"mu", inst.mono.mu},
                         {"L", inst.mono.L},
                         {"L_full", inst.mono.L_full}};
  return rep;
}

OracleSolution solve_oracle(const AffineGame& game, double tol) {
  const VIProblem problem = make_vi_problem(game);
  VIOptions opts;
  opts.tol = tol;
  const VISolution sol = solve_vi(problem, opts);
  OracleSolution out;
  out.x_star = sol.x_star;
  out.iterations = sol.iterations;
  out.lambda_star = recover_multiplier(problem, sol.x_star);
  out.kkt = kkt_residual(problem, out.x_star, out.lambda_star);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Instance inst = make_instance(config);
  const Dims& dims = inst.game->dims();
  const TheoryConstants k = make_theory_constants(*inst.affine, inst.topology);
  const ResolvedStepsizes steps = resolve_stepsizes(config.stepsizes, k);
  const OracleSolution oracle = solve_oracle(*inst.affine, config.oracle_tol);
  const FixedPoint fp = fixed_point_from_solution(
      *inst.game, inst.topology, oracle.x_star, oracle.lambda_star, steps.beta);

  ExperimentResult result;
  fs::create_directories(config.out_dir);
  result.csv_path = (fs::path(config.out_dir) / "trajectory.csv").string();
  result.report_path = (fs::path(config.out_dir) / "report.json").string();

  std::vector<std::optional<double>> distances;
  Trajectory traj;
  {
    std::ofstream csv(result.csv_path, std::ios::binary);
    require(static_cast<bool>(csv), Errc::Io, "cannot write " + result.csv_path);
    TrajectoryCsvWriter writer(csv);
    traj = run(*inst.game, inst.topology, solver_config(config, steps), &fp,
               [&](const TrajectoryRecord& r) {
                 writer.write(r);
                 distances.push_back(r.dist_to_star);
               });
  }

  nlohmann::json fit = nullptr;
  try {
    const RateFit rf = fit_rate(distances, config.tail_fraction);
    fit = {{"rate", rf.rate},
           {"r_squared", rf.r_squared},
           {"window", rf.tail_fraction},
           {"points", rf.points}};
  } catch (const Error& e) {
    if (e.code() != Errc::InsufficientData) throw;
  }

  const TrajectoryRecord& last = traj.records.back();
  double lambda_err = 0.0;
  for (const auto& p : traj.final_state.players)
    lambda_err = std::max(
        lambda_err, (p.lambda - oracle.lambda_star).lpNorm<Eigen::Infinity>());
  const double x_err =
      (last.x - oracle.x_star).lpNorm<Eigen::Infinity>();

  nlohmann::json& rep = result.report;
  rep["config_hash"] = config_hash(config);
  rep["config"] = config_to_json(config);
  rep["instance"] = {{"players", dims.players},
                     {"n", dims.n},
                     {"m", dims.m},
                     {"mu", inst.mono.mu},
                     {"L", inst.mono.L},
                     {"L_full", inst.mono.L_full},
                     {"sigma", inst.topology.sigma},
                     {"lambda_max_B", inst.topology.lambda_max_B},
                     {"min_nonzero_sv_B", inst.topology.min_nonzero_sv_B}};
  rep["stepsizes"] = {{"alpha", steps.alpha},
                      {"beta", steps.beta},
                      {"gamma", steps.gamma},
                      {"alpha_certified", !config.stepsizes.alpha.has_value()},
                      {"beta_certified", !config.stepsizes.beta.has_value()},
                      {"gamma_certified", !config.stepsizes.gamma.has_value()}};
  rep["certification"] =
      certification_report(k, steps.alpha, steps.beta, steps.gamma);
  rep["a"] = rep["certification"]["a"];
  rep["certified"] = rep["certification"]["certified"];
  rep["oracle"] = {{"iterations", oracle.iterations},
                   {"kkt_residual", oracle.kkt.residual},
                   {"lambda_star", vec_json(oracle.lambda_star)}};
  rep["final"] = {{"iterations", traj.final_state.iteration},
                  {"dist_to_star", finite_or_null(last.dist_to_star.value_or(NAN))},
                  {"x_error_inf", x_err},
                  {"lambda_error_inf", lambda_err},
                  {"consensus_err", last.consensus_error},
                  {"dual_spread", last.dual_spread},
                  {"constraint_violation", last.constraint_violation},
                  {"kkt_residual", last.kkt_residual},
                  {"stopped_early", traj.stopped_early}};
  rep["rate_fit"] = fit;

  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  if (config.record_timing) rep["wall_seconds"] = result.wall_seconds;

  std::ofstream out(result.report_path, std::ios::binary);
  require(static_cast<bool>(out), Errc::Io, "cannot write " + result.report_path);
  out << rep.dump(2) << '\n';
  return result;
}

FormComparison compare_forms(const Game& game, const Topology& topology,
                             const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.init = InitMode::FeasibleConsistent;
  Rng rng(cfg.seed);
  SolverState dec = initialize(game, topology, cfg, rng);
  SolverState semi = dec;
  const Dims& d = game.dims();
  FormComparison out;
  for (int k = 0; k < cfg.max_iters; ++k) {
    dec = synchronous_round(dec, game, topology, cfg);
    semi = semi_centralized_round(semi, game, topology, cfg);
    out.max_rel_dev_x =
        std::max(out.max_rel_dev_x,
                 rel_dev(stacked_decisions(dec, d), stacked_decisions(semi, d)));
    out.max_rel_dev_lambda =
        std::max(out.max_rel_dev_lambda, rel_dev(stacked_multipliers(dec, d.m),
                                                 stacked_multipliers(semi, d.m)));
    ++out.iterations;
  }
  return out;
}

nlohmann::json compare_forms(const ExperimentConfig& config) {
  const Instance inst = make_instance(config);
  const TheoryConstants k = make_theory_constants(*inst.affine, inst.topology);
  const ResolvedStepsizes steps = resolve_stepsizes(config.stepsizes, k);
  const FormComparison cmp = compare_forms(*inst.game, inst.topology,
                                           solver_config(config, steps));
  return {{"config_hash", config_hash(config)},
          {"iterations", cmp.iterations},
          {"max_rel_dev_x", cmp.max_rel_dev_x},
          {"max_rel_dev_lambda", cmp.max_rel_dev_lambda},
          {"stepsizes",
           {{"alpha", steps.alpha}, {"beta", steps.beta}, {"gamma", steps.gamma}}}};
}

}  // namespace gnelin
