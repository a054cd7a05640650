#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "gnelin/game.hpp"
#include "gnelin/rate_fit.hpp"
#include "gnelin/solver.hpp"
#include "gnelin/stepsize.hpp"
#include "gnelin/topology.hpp"
#include "gnelin/vi_oracle.hpp"

namespace gnelin {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct TopologySpec {
  std::string kind = "random";  // ring | random | complete | file
  double edge_probability = 0.2;
  std::string path;             // for kind == "file"
};

/// Unset entries are derived from the certificate as `certified_fraction`
/// times the corresponding bound (alpha first, then beta, then gamma).
struct StepsizeSpec {
  std::optional<double> alpha;
  std::optional<double> beta = 0.1;
  std::optional<double> gamma = 0.1;
  double certified_fraction = 0.99;
};

/// Parses "a,b,g" where each entry is a number or "certified", or the single
/// word "certified" for all three.
StepsizeSpec parse_stepsizes(const std::string& text);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string instance = "cournot";  // cournot | file
  std::string game_path;             // for instance == "file"
  int N = 10;
  int m = 5;
  int n_i = 5;
  // Market draws, in stream order per firm: Q diagonal, q, b; then per market
  // the price intercept and slope.
  Range Q_diag{1.0, 8.0};
  Range q{1.0, 2.0};
  Range b{10.0, 20.0};
  Range price_intercept{1.0, 3.0};
  Range price_slope{5.0, 10.0};
  TopologySpec topology;
  StepsizeSpec stepsizes;
  int max_iters = 20000;
  double stop_tol = std::numeric_limits<double>::infinity();
  Form form = Form::Decentralized;
  InitMode init = InitMode::FeasibleConsistent;
  double tail_fraction = 0.5;
  double oracle_tol = 1e-12;
  std::string out_dir = "out";
  bool record_timing = false;

  /// N = 50, m = n_i = 5 as in the original market study.
  void apply_full_scale();
};

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);
/// Relative game and topology paths are resolved against the file's folder.
ExperimentConfig load_config(const std::string& path);

/// Throws InvalidConfig on empty or nonpositive ranges, N < 2, n_i != m for
/// the market instance and similar.
void validate_config(const ExperimentConfig& config);

/// FNV-1a over the canonical JSON dump, as 16 hex digits. Output location
/// and the timing switch are left out.
std::string config_hash(const ExperimentConfig& config);

/// A generated problem: the game as specified, its affine form (used for all
/// constants) and the communication graph.
struct Instance {
  std::unique_ptr<Game> game;
  std::unique_ptr<AffineGame> affine;
  Topology topology;
  MonotonicityConstants mono;
};

/// Deterministic in the config: game parameters are drawn first, then the
/// random graph, all from one generator seeded with config.seed.
Instance generate_cournot(const ExperimentConfig& config);

/// generate_cournot for instance == "cournot", otherwise loads the game file.
Instance make_instance(const ExperimentConfig& config);

struct ResolvedStepsizes {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

ResolvedStepsizes resolve_stepsizes(const StepsizeSpec& spec,
                                    const TheoryConstants& constants);

nlohmann::json certify(const ExperimentConfig& config);

struct OracleSolution {
  VectorXd x_star;
  VectorXd lambda_star;
  int iterations = 0;
  KKTReport kkt;
};

OracleSolution solve_oracle(const AffineGame& game, double tol = 1e-12);

struct ExperimentResult {
  nlohmann::json report;
  std::string csv_path;
  std::string report_path;
  double wall_seconds = 0.0;
};

/// Solves the oracle, runs the solver against its fixed point and fits the
/// tail rate. Rows stream to <out_dir>/trajectory.csv as they are produced;
/// the summary goes to <out_dir>/report.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct FormComparison {
  int iterations = 0;
  double max_rel_dev_x = 0.0;
  double max_rel_dev_lambda = 0.0;
};

/// Runs both forms from the same feasible-consistent start and reports the
/// largest deviation ||a - b||_inf / max(1, ||b||_inf) over all rounds.
FormComparison compare_forms(const Game& game, const Topology& topology,
                             const SolverConfig& config);

nlohmann::json compare_forms(const ExperimentConfig& config);

}  // namespace gnelin
