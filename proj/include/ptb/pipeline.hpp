#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptb/grid.hpp"
#include "ptb/kernel.hpp"

namespace ptb {

enum class SyncMode { barrier, relaxed };

std::string to_string(SyncMode s);
SyncMode parse_sync(const std::string& s);

/// Pipelined temporal blocking parameters.
///
/// n teams of t threads each; every thread applies T updates to each block it
/// touches, so one node sweep advances the field by U = n*t*T time levels.
/// Threads keep between d_l and d_u blocks of distance to their neighbours,
/// plus an extra d_t between consecutive teams.
struct PipelineConfig {
  int teams = 1;
  int team_size = 1;
  int updates_per_thread = 2;
  int dl = 1;
  int du = 4;
  int dt = 0;
  SyncMode sync = SyncMode::relaxed;
  BlockSize block{120, 8, 8};
  Storage storage = Storage::two_grid;

  /// Relaxed mode gives up if a thread spins this long without progress.
  std::chrono::milliseconds spin_timeout{120000};
  /// Best-effort pinning of thread i to core i (mod available cores).
  bool pin_threads = false;

  int threads() const { return teams * team_size; }
  int updates_per_sweep() const { return teams * team_size * updates_per_thread; }
  void validate() const;
};

/// Block size used when none is given: x up to 120 cells, y and z up to 8.
BlockSize default_block(const GridDims& dims);

/// Per time level: cells that get the stencil (`domain`) and the box that is
/// partitioned among blocks (`extent`, which adds the ghost ring carried along
/// by compressed storage).
struct LevelGeometry {
  Box domain;
  Box extent;
};

/// Shared-memory geometry: every level updates the interior, with a one-cell
/// ring on all sides.
std::vector<LevelGeometry> interior_levels(const GridDims& dims, int levels);

/// Block tiling of a sequence of time levels.
///
/// Base blocks tile `base` lexicographically (z outer, x inner). At level L
/// the interior block edges move by L-1 cells towards the traversal's start
/// (down for forward, up for reverse) and are clamped to the level's extent;
/// the first and last block along each axis absorb the rest of the extent.
/// Regions are tensor products of per-axis intervals, so each level is an
/// exact partition of its extent.
///
/// Clamping to the extent rather than the domain keeps every edge exactly
/// one cell behind its position at the previous level. With a domain that
/// shrinks from below, domain clamping would let an edge move against the
/// traversal and a carried cell would be copied before it was produced.
class BlockSchedule {
 public:
  BlockSchedule(std::vector<LevelGeometry> levels, const Box& base, const BlockSize& bs,
                Traversal dir);

  int levels() const { return int(levels_.size()); }
  std::int64_t blocks() const { return counts_[0] * std::int64_t(counts_[1]) * counts_[2]; }
  Index3 block_counts() const { return {counts_[0], counts_[1], counts_[2]}; }
  Traversal direction() const { return dir_; }
  const LevelGeometry& level(int level) const { return levels_.at(std::size_t(level - 1)); }

  /// Block coordinates of the `step`-th block in processing order.
  Index3 block_at(std::int64_t step) const;
  /// Region updated at `level` (1-based) by the `step`-th block.
  Box region(std::int64_t step, int level) const;

 private:
  std::vector<LevelGeometry> levels_;
  Index3 counts_;
  Traversal dir_;
  // edges_[axis][level-1] has counts_[axis]+1 entries.
  std::array<std::vector<std::vector<int>>, 3> edges_;
};

/// Shared-memory schedule for one node sweep. Rejects U larger than any
/// interior extent and block sizes outside the interior.
BlockSchedule build_schedule(const GridDims& dims, const PipelineConfig& cfg,
                             Traversal dir = Traversal::forward);

/// Brute-force check that the regions of `level` cover its extent exactly once.
bool validate_partition(const BlockSchedule& schedule, int level);

/// One counter per thread, each on its own 128-byte line. Only thread i
/// writes c[i] (release); everyone else reads (acquire).
class ThreadCounters {
 public:
  explicit ThreadCounters(int threads,
                          std::int64_t blocks_per_sweep = std::numeric_limits<std::int64_t>::max());

  int size() const { return int(slots_.size()); }
  std::int64_t blocks_per_sweep() const { return blocks_; }
  std::int64_t load(int i) const { return slots_[std::size_t(i)].value.load(std::memory_order_acquire); }
  void store(int i, std::int64_t v) { slots_[std::size_t(i)].value.store(v, std::memory_order_release); }
  void reset();

 private:
  struct alignas(128) Slot {
    std::atomic<std::int64_t> value{0};
  };
  std::vector<Slot> slots_;
  std::int64_t blocks_;
};

/// Minimum lead thread i needs over itself from its predecessor (d_l, plus
/// d_t on a team's front thread).
int lower_distance(int thread, const PipelineConfig& cfg);
/// Maximum lead thread i may have over its successor (d_u, plus d_t on a
/// team's rear thread).
int upper_distance(int thread, const PipelineConfig& cfg);

/// Relaxed-synchronization gate for thread i about to start its next block:
///   c[i-1] - c[i] >= D_l(i)   (skipped for the global front thread, and
///                               satisfied once c[i-1] reached the sweep's block count)
///   c[i] - c[i+1] <= D_u(i)   (skipped for the global rear thread)
bool may_proceed(std::span<const std::int64_t> counters, int thread, const PipelineConfig& cfg,
                 std::int64_t blocks_per_sweep = std::numeric_limits<std::int64_t>::max());
bool may_proceed(const ThreadCounters& counters, int thread, const PipelineConfig& cfg);

struct TraceEvent {
  int sweep = 0;
  int thread = 0;
  std::int64_t block = 0;
  std::int64_t c_prev = -1;  // -1: no predecessor
  std::int64_t c_self = 0;
  std::int64_t c_next = -1;  // -1: no successor
};

struct TraceViolation {
  TraceEvent event;
  std::string reason;
};

struct PipelineTrace {
  std::vector<TraceEvent> events;
  std::vector<TraceViolation> violations;
  std::int64_t blocks_per_sweep = 0;
};

/// Checks every recorded block start against the distance conditions and
/// counter monotonicity.
std::vector<TraceViolation> audit_trace(const PipelineTrace& trace, const PipelineConfig& cfg);

/// CSV `sweep,thread,block,c_prev,c_self,c_next`.
void write_trace_csv(std::ostream& os, const PipelineTrace& trace);

class PipelineStalled : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs one node sweep of `schedule` (whose level count must equal U) on the
/// grid and commits the levels. When `trace` is non-null every block start is
/// recorded with the counter values the gate evaluated.
void run_sweep(Grid& grid, const BlockSchedule& schedule, const PipelineConfig& cfg,
               int sweep_index = 0, PipelineTrace* trace = nullptr);

/// `sweeps` node sweeps on the interior; result equals sweeps*U naive sweeps.
void run_node_sweeps(Grid& grid, const PipelineConfig& cfg, int sweeps);

/// As run_node_sweeps, recording a trace and auditing it.
PipelineTrace instrumented_run(Grid& grid, const PipelineConfig& cfg, int sweeps);

/// Allocates a grid suitable for pipelined sweeps with `cfg` (slack U in
/// compressed mode).
Grid allocate_for(const GridDims& dims, const PipelineConfig& cfg, const FillPattern& pattern);

}  // namespace ptb
