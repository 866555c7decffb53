#include <benchmark/benchmark.h>

#include "aggmark/sim.hpp"
#include "fixtures.hpp"

using namespace aggmark;

namespace {

// Unconditioned paths of the disability model over [0, 65].
void BM_SamplePath(benchmark::State& state) {
  const Simulator sim(fixtures::disability_model(static_cast<int>(state.range(0))), 0.0, 65.0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim.sample_path(0.0, 0, ++seed));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SamplePath)->DenseRange(1, 3);

// Reserve estimate for a disabled life with duration 1 at 40.
void BM_ReserveEstimate(benchmark::State& state) {
  const auto m = fixtures::disability_model(2);
  const auto p = fixtures::waiting_period_annuity();
  Simulator sim(m, 39.0, 65.0);
  const auto c = Conditioning::spell(m, 1, 40.0, 1.0);
  const auto f = discounted_payments_functional(p, 40.0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sim.estimate(c, 1, f, n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ReserveEstimate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
