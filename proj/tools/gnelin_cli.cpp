// gnelin: command-line driver for the market experiment.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gnelin/error.hpp"
#include "gnelin/experiment.hpp"
#include "gnelin/rate_fit.hpp"
#include "gnelin/svg_plot.hpp"
#include "gnelin/trajectory_io.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool full = false;
  std::string stepsizes;
  std::optional<int> max_iters;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "RNG seed (overrides the config)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_flag("--full", f.full, "N = 50, m = n_i = 5");
  cmd->add_option("--stepsizes", f.stepsizes,
                  "a,b,g with numbers or 'certified', or 'certified'");
  cmd->add_option("--max-iters", f.max_iters, "solver rounds");
}

gnelin::ExperimentConfig build_config(const CommonFlags& f) {
  gnelin::ExperimentConfig c;
  if (!f.config_path.empty()) c = gnelin::load_config(f.config_path);
  if (f.seed) c.seed = *f.seed;
  if (!f.out_dir.empty()) c.out_dir = f.out_dir;
  if (f.full) c.apply_full_scale();
  if (!f.stepsizes.empty()) c.stepsizes = gnelin::parse_stepsizes(f.stepsizes);
  if (f.max_iters) c.max_iters = *f.max_iters;
  gnelin::validate_config(c);
  return c;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  gnelin::require(static_cast<bool>(out), gnelin::Errc::Io,
                  "cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed generalized Nash equilibrium seeking"};
  app.require_subcommand(1);

  CommonFlags generate_flags, certify_flags, solve_flags, compare_flags;

  auto* generate = app.add_subcommand("generate", "write the game and graph");
  add_common(generate, generate_flags);

  auto* certify = app.add_subcommand("certify", "print the stepsize certificate");
  add_common(certify, certify_flags);

  auto* solve = app.add_subcommand("solve", "run one experiment");
  add_common(solve, solve_flags);

  auto* compare = app.add_subcommand(
      "compare-forms", "run both iterations and report their deviation");
  add_common(compare, compare_flags);

  std::vector<std::string> rate_csvs;
  std::string rate_column = "dist_to_star";
  double rate_tail = 0.5;
  auto* rates = app.add_subcommand("rates", "fit geometric rates to CSV columns");
  rates->add_option("csv", rate_csvs, "trajectory CSV files")
      ->required()
      ->check(CLI::ExistingFile);
  rates->add_option("--column", rate_column, "column to fit");
  rates->add_option("--tail", rate_tail, "tail fraction")
      ->check(CLI::Range(0.0, 1.0));

  std::vector<std::string> plot_csvs;
  std::vector<std::string> plot_columns{"dist_to_star"};
  std::string plot_output = "convergence.svg";
  gnelin::PlotOptions plot_options;
  plot_options.y_label = "distance";
  auto* plot = app.add_subcommand("plot", "overlay CSV columns in one SVG");
  plot->add_option("csv", plot_csvs, "trajectory CSV files")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--columns", plot_columns, "columns to draw")->delimiter(',');
  plot->add_option("--output,-o", plot_output, "SVG path");
  plot->add_option("--title", plot_options.title, "plot title");
  plot->add_option("--y-label", plot_options.y_label, "y axis label");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      const auto cfg = build_config(generate_flags);
      const auto inst = gnelin::make_instance(cfg);
      std::filesystem::create_directories(cfg.out_dir);
      const auto dir = std::filesystem::path(cfg.out_dir);
      write_json((dir / "game.json").string(), inst.game->to_json());
      write_json((dir / "topology.json").string(),
                 gnelin::topology_to_json(inst.topology));
      const nlohmann::json summary = {
          {"config_hash", gnelin::config_hash(cfg)},
          {"players", inst.game->dims().players},
          {"n", inst.game->dims().n},
          {"m", inst.game->dims().m},
          {"mu", inst.mono.mu},
          {"L", inst.mono.L},
          {"sigma", inst.topology.sigma}};
      std::cout << summary.dump(2) << '\n';
    } else if (*certify) {
      std::cout << gnelin::certify(build_config(certify_flags)).dump(2) << '\n';
    } else if (*solve) {
      const auto result = gnelin::run_experiment(build_config(solve_flags));
      const auto& rep = result.report;
      nlohmann::json summary = {{"csv", result.csv_path},
                                {"report", result.report_path},
                                {"final", rep["final"]},
                                {"rate_fit", rep["rate_fit"]},
                                {"certified", rep["certified"]},
                                {"wall_seconds", result.wall_seconds}};
      std::cout << summary.dump(2) << '\n';
    } else if (*compare) {
      std::cout << gnelin::compare_forms(build_config(compare_flags)).dump(2)
                << '\n';
    } else if (*rates) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& path : rate_csvs) {
        const auto table = gnelin::read_csv_file(path);
        const auto fit = gnelin::fit_rate(table.column(rate_column), rate_tail);
        out.push_back({{"file", path},
                       {"column", rate_column},
                       {"rate", fit.rate},
                       {"r_squared", fit.r_squared},
                       {"window", fit.tail_fraction},
                       {"points", fit.points}});
      }
      std::cout << out.dump(2) << '\n';
    } else if (*plot) {
      gnelin::emit_svg_plot(plot_csvs, plot_columns, plot_output, plot_options);
      std::cout << plot_output << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
