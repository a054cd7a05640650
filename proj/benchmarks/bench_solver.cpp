#include <benchmark/benchmark.h>

#include "gnelin/experiment.hpp"
#include "gnelin/solver.hpp"
#include "gnelin/vi_oracle.hpp"

namespace {

gnelin::Instance market(int players) {
  gnelin::ExperimentConfig c;
  c.N = players;
  return gnelin::generate_cournot(c);
}

gnelin::SolverConfig small_steps() {
  gnelin::SolverConfig c;
  c.alpha = 1e-5;
  c.beta = 0.1;
  c.gamma = 0.1;
  return c;
}

void BM_SynchronousRound(benchmark::State& st) {
  const gnelin::Instance inst = market(static_cast<int>(st.range(0)));
  const gnelin::SolverConfig c = small_steps();
  gnelin::Rng rng(c.seed);
  gnelin::SolverState s = gnelin::initialize(*inst.game, inst.topology, c, rng);
  for (auto _ : st) {
    s = gnelin::synchronous_round(s, *inst.game, inst.topology, c);
    benchmark::DoNotOptimize(s.players.front().lambda.data());
  }
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_SynchronousRound)->Arg(10)->Arg(50);

void BM_SemiCentralizedRound(benchmark::State& st) {
  const gnelin::Instance inst = market(static_cast<int>(st.range(0)));
  gnelin::SolverConfig c = small_steps();
  c.form = gnelin::Form::SemiCentralized;
  gnelin::Rng rng(c.seed);
  gnelin::SolverState s = gnelin::initialize(*inst.game, inst.topology, c, rng);
  for (auto _ : st) {
    s = gnelin::semi_centralized_round(s, *inst.game, inst.topology, c);
    benchmark::DoNotOptimize(s.y.data());
  }
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_SemiCentralizedRound)->Arg(10)->Arg(50);

void BM_SolveVI(benchmark::State& st) {
  const gnelin::Instance inst = market(static_cast<int>(st.range(0)));
  const gnelin::VIProblem p = gnelin::make_vi_problem(*inst.affine);
  for (auto _ : st) {
    const gnelin::VISolution sol = gnelin::solve_vi(p);
    benchmark::DoNotOptimize(sol.x_star.data());
  }
}
BENCHMARK(BM_SolveVI)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
