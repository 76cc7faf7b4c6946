#include <benchmark/benchmark.h>

#include "ptb/kernel.hpp"
#include "ptb/pipeline.hpp"

using namespace ptb;

namespace {

void set_rate(benchmark::State& state, const GridDims& d, int levels_per_iter) {
  state.counters["MLUP"] = benchmark::Counter(double(d.nx) * d.ny * d.nz * levels_per_iter / 1e6,
                                               benchmark::Counter::kIsIterationInvariantRate);
}

void BM_Naive(benchmark::State& state) {
  const GridDims d = cube(int(state.range(0)));
  Grid g = Grid::allocate(d, Storage::two_grid, FillPattern::random(1));
  for (auto _ : state) {
    sweep_naive(g);
    benchmark::ClobberMemory();
  }
  set_rate(state, d, 1);
}

void BM_Blocked(benchmark::State& state) {
  const GridDims d = cube(int(state.range(0)));
  Grid g = Grid::allocate(d, Storage::two_grid, FillPattern::random(1));
  const BlockSize bs = default_block(d);
  for (auto _ : state) {
    sweep_spatial_blocked(g, bs);
    benchmark::ClobberMemory();
  }
  set_rate(state, d, 1);
}

void BM_Pipeline(benchmark::State& state) {
  const GridDims d = cube(int(state.range(0)));
  PipelineConfig c;
  c.team_size = int(state.range(1));
  c.updates_per_thread = 2;
  c.sync = state.range(2) ? SyncMode::relaxed : SyncMode::barrier;
  c.storage = state.range(3) ? Storage::compressed : Storage::two_grid;
  c.block = default_block(d);
  Grid g = allocate_for(d, c, FillPattern::random(1));
  for (auto _ : state) {
    run_node_sweeps(g, c, 1);
    benchmark::ClobberMemory();
  }
  set_rate(state, d, c.updates_per_sweep());
}

}  // namespace

BENCHMARK(BM_Naive)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Blocked)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pipeline)
    ->ArgNames({"size", "t", "relaxed", "compressed"})
    ->ArgsProduct({{64, 128}, {2, 4}, {0, 1}, {0, 1}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
