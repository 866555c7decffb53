#include <benchmark/benchmark.h>

#include "aggmark/prodint.hpp"
#include "fixtures.hpp"

using namespace aggmark;

namespace {

MatrixFunction varying(int d) {
  const Matrix a = fixtures::random_generator(d, 1.0, 3);
  return MatrixFunction(d, [a](double t) { return Matrix(a * (1.0 + 0.1 * t)); });
}

// One product integral over [0, 10] on 100 intervals; argument = dimension.
void BM_ProductIntegral(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto f = varying(d);
  const auto g = TimeGrid::uniform(0, 10, 100);
  for (auto _ : state) benchmark::DoNotOptimize(product_integral(f, 0.0, 10.0, g));
}
BENCHMARK(BM_ProductIntegral)->RangeMultiplier(2)->Range(2, 32);

// F(t, x_l) at every grid point in one pass.
void BM_ForwardSweep(benchmark::State& state) {
  const auto f = varying(8);
  const auto g = TimeGrid::uniform(0, 10, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_sweep(f, 0.0, g));
}
BENCHMARK(BM_ForwardSweep)->Arg(100)->Arg(400)->Arg(1600);

}  // namespace

BENCHMARK_MAIN();
