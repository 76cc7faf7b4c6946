#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ptb/grid.hpp"
#include "ptb/pipeline.hpp"
#include "ptb/transport.hpp"

namespace ptb {

/// Ranks per dimension.
struct Layout {
  int px = 1;
  int py = 1;
  int pz = 1;

  int ranks() const { return px * py * pz; }
  int operator[](int axis) const { return axis == 0 ? px : (axis == 1 ? py : pz); }
  friend bool operator==(const Layout&, const Layout&) = default;
};

/// "PXxPYxPZ".
Layout parse_layout(const std::string& s);
std::string to_string(const Layout& l);
/// Near-cubic factorisation of `ranks`, larger factors on x.
Layout balanced_layout(int ranks);

inline constexpr int kNoNeighbor = -1;

struct RankInfo {
  int rank = 0;
  Index3 coord;
  /// Global index of local interior cell (0,0,0).
  Index3 offset;
  /// Local interior extents; ghost width equals the halo width.
  GridDims dims;
  /// Neighbour rank per Face, kNoNeighbor at the global boundary.
  std::array<int, 6> neighbor{kNoNeighbor, kNoNeighbor, kNoNeighbor,
                              kNoNeighbor, kNoNeighbor, kNoNeighbor};

  bool has_neighbor(Face f) const { return neighbor[std::size_t(f)] != kNoNeighbor; }
  int neighbor_count() const;
};

struct Decomposition {
  GridDims global;
  Layout layout;
  int halo = 1;
  std::vector<RankInfo> ranks;

  int rank_of(Index3 coord) const;
};

/// Splits every dimension as evenly as possible, extra cells going to the
/// lowest coordinates. Throws std::invalid_argument if a split dimension
/// would give some rank fewer than `halo` cells.
Decomposition decompose(const GridDims& global, const Layout& layout, int halo);

struct HaloPhase {
  int axis = 0;
  SlabExtent extent;
};

/// Directional exchange: x, then y with x-extended slabs, then z with x- and
/// y-extended slabs, so edge and corner ghosts arrive without diagonal messages.
struct HaloPlan {
  int depth = 1;
  std::array<HaloPhase, 3> phases;

  static HaloPlan directional(int depth);
  /// Same phases (each keeping its slab extent) executed in another order.
  HaloPlan reordered(std::array<int, 3> axis_order) const;
};

/// Local grid of one rank cut out of a global field (ghost width 1). Interior
/// cells and global boundary ghosts take the global values, neighbour-fed
/// ghosts start as NaN, ghosts beyond the global ghost ring are 0.
Grid make_local_grid(const Snapshot& global, const RankInfo& info, Storage storage, int slack = 0);

/// Fills every neighbour-fed ghost shell of depth plan.depth. Within a phase a
/// rank at an even coordinate serves its low side first, an odd one its high
/// side first. Messages carry `step` as their sweep counter.
void exchange_halos(Grid& grid, const RankInfo& info, const HaloPlan& plan, Endpoint& ep,
                    std::uint32_t step);

/// Time-level geometry of one outer step: level s updates the interior grown
/// by h-s layers on every side that has a neighbour. The extent adds the
/// one-cell Dirichlet ring on boundary sides and stays fixed across levels.
std::vector<LevelGeometry> shrinking_levels(const RankInfo& info, int halo);

/// Applies `halo` time levels as halo/U pipelined node sweeps.
void outer_step(Grid& grid, const RankInfo& info, const PipelineConfig& cfg, int halo);

struct DistributedOptions {
  /// Node sweeps per exchange; halo width is batch * U.
  int batch = 1;
  std::array<int, 3> phase_order{0, 1, 2};
};

struct RankReport {
  int rank = 0;
  Index3 coord;
  GridDims dims;
  int neighbors = 0;
  EndpointStats stats;
  /// Messages sent in each exchange round.
  std::vector<std::uint64_t> messages_per_round;
};

struct DistributedResult {
  Decomposition decomposition;
  /// Global field (ghost width 1) with every rank's interior gathered in.
  Snapshot gathered;
  std::vector<RankReport> ranks;
};

/// Runs `outer_steps` exchange + outer_step rounds on a loopback world of
/// layout.ranks() ranks and gathers the result. Neighbour-fed ghosts start out
/// as NaN; global boundary ghosts hold the pattern's values.
DistributedResult run_distributed(const GridDims& global, const FillPattern& pattern,
                                  const Layout& layout, const PipelineConfig& cfg, int outer_steps,
                                  const DistributedOptions& opts = {});

}  // namespace ptb
