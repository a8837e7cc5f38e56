#include <benchmark/benchmark.h>

#include "mgfreq/mpc.hpp"
#include "mgfreq/sim.hpp"

using namespace mgfreq;

namespace {

// The QP with the most active constraints seen over a rapid MPC run.
QpProblem hardest_rapid_qp() {
  QpProblem worst;
  std::size_t most = 0;
  RunHooks hooks;
  hooks.on_mpc_step = [&](std::size_t, const MpcStepResult& r) {
    if (worst.h.size() == 0 || r.qp_solution.active_set.size() > most) {
      most = r.qp_solution.active_set.size();
      worst = r.qp;
    }
  };
  run_scenario(make_scenario(ScenarioKind::kRapid, ControllerKind::kMpc, 1), SimConfig{}, hooks);
  return worst;
}

void BM_SolveQp(benchmark::State& state) {
  const QpProblem qp = hardest_rapid_qp();
  for (auto _ : state) benchmark::DoNotOptimize(solve_qp(qp));
  state.counters["rows"] = static_cast<double>(qp.cu.rows());
}
BENCHMARK(BM_SolveQp);

void BM_BuildPrediction(benchmark::State& state) {
  const PlantModel model = build_plant_model(MicrogridParams{});
  MpcConfig cfg;
  cfg.p = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mpc_gain(build_prediction_matrices(model, cfg), cfg));
}
BENCHMARK(BM_BuildPrediction)->Arg(10)->Arg(30);

void BM_RunScenario(benchmark::State& state) {
  const auto controller = static_cast<ControllerKind>(state.range(0));
  const Scenario s = make_scenario(ScenarioKind::kRapid, controller, 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(s, SimConfig{}));
  state.SetLabel(to_string(controller));
}
BENCHMARK(BM_RunScenario)
    ->Arg(static_cast<int>(ControllerKind::kMpc))
    ->Arg(static_cast<int>(ControllerKind::kPiAll))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
