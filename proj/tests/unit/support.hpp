#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptb/decomp.hpp"
#include "ptb/grid.hpp"
#include "ptb/kernel.hpp"
#include "ptb/pipeline.hpp"
#include "ptb/verify.hpp"

namespace ptb::test {

inline std::string golden(const std::string& name) { return std::string(PTB_GOLDEN_DIR) + "/" + name; }

struct Rng {
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  double real(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  bool coin() { return uniform(0, 1) == 1; }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[std::size_t(uniform(0, int(v.size()) - 1))]; }

  std::mt19937_64 eng;
};

inline GridDims random_dims(Rng& r, int lo, int hi, int ghost = 1) {
  return {r.uniform(lo, hi), r.uniform(lo, hi), r.uniform(lo, hi), ghost};
}

inline BlockSize random_block(Rng& r, const GridDims& d) {
  return {r.uniform(1, d.nx), r.uniform(1, d.ny), r.uniform(1, d.nz)};
}

/// Random pipeline config whose U fits into `max_u`.
inline PipelineConfig random_config(Rng& r, int max_u) {
  PipelineConfig c;
  do {
    c.teams = r.uniform(1, 2);
    c.team_size = r.uniform(1, 3);
    c.updates_per_thread = r.uniform(1, 2);
  } while (c.updates_per_sweep() > max_u);
  c.dl = r.uniform(1, 2);
  c.du = r.uniform(c.dl, 5);
  c.dt = r.pick(std::vector<int>{0, 1, 3});
  c.sync = r.coin() ? SyncMode::relaxed : SyncMode::barrier;
  c.storage = r.coin() ? Storage::compressed : Storage::two_grid;
  return c;
}

/// A rank description with made-up neighbour ids on the faces flagged in `has`.
inline RankInfo fake_rank(const GridDims& local, Index3 offset, std::array<bool, 6> has) {
  RankInfo info;
  info.dims = local;
  info.offset = offset;
  for (std::size_t f = 0; f < 6; ++f) info.neighbor[f] = has[f] ? 1 : kNoNeighbor;
  return info;
}

bool bitwise_equal(double a, double b);

/// Executes one node sweep single-threaded, interleaving the threads' level
/// updates in random order. A thread may only start a block when may_proceed
/// allows it, so every interleaving the gate admits can come up. Throws if
/// no thread can move before all are done.
void simulate_sweep(Grid& g, const BlockSchedule& s, const PipelineConfig& cfg, Rng& r);

/// Every ghost cell of `a` equals the one of `b` bitwise.
bool ghosts_unchanged(const Snapshot& a, const Snapshot& b);

}  // namespace ptb::test
