#pragma once

#include "ptb/grid.hpp"

namespace ptb {

inline constexpr double kSixth = 1.0 / 6.0;

/// Six-point Jacobi mean. The summation order is fixed so that every sweep
/// variant produces bitwise identical results.
inline double stencil_point(double xm, double xp, double ym, double yp, double zm, double zp) {
  return (((xm + xp) + (ym + yp)) + (zm + zp)) * kSixth;
}

struct BlockSize {
  int bx = 1;
  int by = 1;
  int bz = 1;

  int operator[](int axis) const { return axis == 0 ? bx : (axis == 1 ? by : bz); }
  friend bool operator==(const BlockSize&, const BlockSize&) = default;
};

BlockSize parse_block(const std::string& s);
std::string to_string(const BlockSize& bs);
/// Throws std::invalid_argument unless 1 <= b <= n in every dimension.
void validate_block(const BlockSize& bs, const GridDims& dims);

/// Serial reference sweep (two-grid only): every interior cell of the
/// non-current array becomes the mean of its neighbours, then the arrays swap.
void sweep_naive(Grid& grid);

/// Same result as sweep_naive, traversed block by block; blocks are spread
/// over OpenMP threads.
void sweep_spatial_blocked(Grid& grid, const BlockSize& bs);

/// Where one time level of a sweep lives in storage.
///
/// `level` is 1-based within the current sweep; the grid's stored state
/// (active array or origin offset) describes the sweep's start. Cells of a
/// region outside `domain` are skipped in two-grid mode and carried unchanged
/// to the shifted location in compressed mode.
struct LevelMode {
  int level = 1;
  Traversal direction = Traversal::forward;
  Box domain;
};

/// Updates every cell of `region` exactly once from the previous time level.
/// Throws std::out_of_range if the region, its reads, or its shifted writes
/// leave the allocation.
void update_block(Grid& grid, const Box& region, const LevelMode& mode);

}  // namespace ptb
