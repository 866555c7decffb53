#include <benchmark/benchmark.h>

#include "aggmark/cashflow.hpp"
#include "fixtures.hpp"

using namespace aggmark;

namespace {

const std::vector<SpellCondition> kRows{{0, 0.0}, {0, 5.0}, {1, 0.0}, {1, 2.0}};

// Duration-aware engine on the 8-microstate model; argument = grid steps over [40, 65].
void BM_DurationAware(benchmark::State& state) {
  const auto m = fixtures::eight_state_model();
  const auto p = fixtures::eight_state_payments();
  const auto g = TimeGrid::uniform(40, 65, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(expected_cashflow_reset(m, kRows, 40.0, g, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DurationAware)->Arg(75)->Arg(150)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond)
    ->Complexity();

void BM_FastPath(benchmark::State& state) {
  const auto m = fixtures::eight_state_model();
  const auto p = fixtures::eight_state_payments();
  const auto g = TimeGrid::uniform(40, 65, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fast_path_cashflow(m, kRows, 40.0, g, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FastPath)->Arg(75)->Arg(150)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond)
    ->Complexity();

// Waiting-period annuity: duration-dependent payments, d2 in {1, 2, 3}.
void BM_WaitingPeriod(benchmark::State& state) {
  const auto m = fixtures::disability_model(static_cast<int>(state.range(0)));
  const auto p = fixtures::waiting_period_annuity();
  const auto g = TimeGrid::uniform(40, 65, 500);
  for (auto _ : state)
    benchmark::DoNotOptimize(expected_cashflow_reset(m, {{1, 0.0}, {1, 1.0}}, 40.0, g, p));
}
BENCHMARK(BM_WaitingPeriod)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
