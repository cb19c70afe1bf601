// Serial reference against the tiled OpenMP implementation of the STD map.
//
//   bench_std_map --benchmark_filter=Gray
//
// Arguments are (side length, paths per half neighborhood). The Sweep cases
// time the 17 data scales of a sweep row computed from one set of paths.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "stdtex/discrepancy.hpp"
#include "stdtex/model_cache.hpp"
#include "stdtex/rng.hpp"
#include "stdtex/sweep.hpp"

namespace {

using namespace stdtex;

Field noise_image(int side) {
  Field f(side, side);
  CounterStream rng(42, 0, 0, 0);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) f.set({x, y}, (x < side / 2 ? 0.3 : 0.6) + 0.3 * rng.uniform());
  }
  return f;
}

const ModelSet& models(double lambda) {
  static ModelCache cache;
  return *cache.get(lambda);
}

void set_counters(benchmark::State& state, int side) {
  state.counters["pixels/s"] =
      benchmark::Counter(static_cast<double>(side) * side, benchmark::Counter::kIsIterationInvariantRate);
  state.counters["threads"] = omp_get_max_threads();
}

void BM_GrayReference(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Field f = noise_image(side);
  const StdOptions o{static_cast<int>(state.range(1)), 1, false};
  for (auto _ : state) benchmark::DoNotOptimize(std_map_reference(f, models(1.0), {KernelKind::Gray, 0.25}, o));
  set_counters(state, side);
}

void BM_GrayParallel(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Field f = noise_image(side);
  const StdOptions o{static_cast<int>(state.range(1)), 1, false};
  for (auto _ : state) benchmark::DoNotOptimize(std_map(f, models(1.0), {KernelKind::Gray, 0.25}, o));
  set_counters(state, side);
}

void BM_SweepRowParallel(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Field f = noise_image(side);
  const std::vector<double> kappas = default_kappas();
  const StdOptions o{static_cast<int>(state.range(1)), 1, false};
  for (auto _ : state) benchmark::DoNotOptimize(std_maps(f, models(3.0), KernelKind::Gray, kappas, o));
  set_counters(state, side);
}

void BM_SweepRowReference(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Field f = noise_image(side);
  const StdOptions o{static_cast<int>(state.range(1)), 1, false};
  for (auto _ : state) {
    for (double k : default_kappas()) {
      benchmark::DoNotOptimize(std_map_reference(f, models(3.0), {KernelKind::Gray, k}, o));
    }
  }
  set_counters(state, side);
}

}  // namespace

BENCHMARK(BM_GrayReference)->Args({16, 50})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GrayParallel)->Args({16, 50})->Args({64, 100})->Args({64, 500})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepRowReference)->Args({12, 20})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepRowParallel)->Args({12, 20})->Args({64, 100})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
