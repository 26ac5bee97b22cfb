// Serial against OpenMP paths of the main kernels. Arg 0 is serial, 1 parallel.
#include <benchmark/benchmark.h>

#include "zsirl/equilibrium.hpp"
#include "zsirl/mirl.hpp"
#include "zsirl/montecarlo.hpp"

using namespace zsirl;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

struct Paper {
  SoccerSpec spec = SoccerSpec::paper(SoccerVariant::Shoot);
  MarkovGame game = build_soccer(spec);
  Bipolicy eq = minimax_bipolicy(game, game.rewards(), spec.gamma).bipolicy;
};

const Paper& paper() {
  static const Paper p;
  return p;
}

void BM_Minimax(benchmark::State& state) {
  const Paper& p = paper();
  MinimaxOptions opt;
  opt.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(minimax_bipolicy(p.game, p.game.rewards(), p.spec.gamma, opt));
}

void BM_StateConstraints(benchmark::State& state) {
  const SoccerSpec spec = SoccerSpec::paper(SoccerVariant::Simple);
  const MarkovGame g = build_soccer(spec);
  const Bipolicy eq = minimax_bipolicy(g, g.rewards(), spec.gamma).bipolicy;
  for (auto _ : state) benchmark::DoNotOptimize(state_reward_constraints(g, eq, spec.gamma, mode(state)));
}

void BM_PlayMatches(benchmark::State& state) {
  const Paper& p = paper();
  for (auto _ : state)
    benchmark::DoNotOptimize(play_matches(p.game, p.eq.pi1, p.eq.pi2, 2000, 1, 1000, mode(state)));
}

void BM_EstimateValue(benchmark::State& state) {
  const Paper& p = paper();
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_value(p.game, p.game.rewards(), p.eq, 0, 20000, 132, 1, mode(state)));
}

}  // namespace

BENCHMARK(BM_Minimax)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StateConstraints)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlayMatches)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateValue)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
