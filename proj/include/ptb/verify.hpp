#pragma once

#include <string>

#include "ptb/grid.hpp"

namespace ptb {

/// `levels` naive sweeps from `pattern` on a two-grid field.
Snapshot oracle(const GridDims& dims, const FillPattern& pattern, int levels);

struct Comparison {
  double max_abs = 0;
  /// Denominator max(|a|, |b|, 1e-300).
  double max_rel = 0;
  Index3 location;
  bool bitwise = true;
  /// Cells where exactly one side, or both sides, are NaN.
  std::int64_t nan_cells = 0;
  bool pass = true;

  std::string describe() const;
};

/// Compares two snapshots cell by cell over the interior, or over the whole
/// logical box when `include_ghosts` is set. Passes iff no NaN was met and
/// max_rel <= tol. Throws std::invalid_argument on differing extents.
Comparison compare(const Snapshot& a, const Snapshot& b, double tol, bool include_ghosts = false);

struct Range {
  double min = 0;
  double max = 0;
};

/// Min and max over `box`.
Range value_range(const Snapshot& s, const Box& box);

/// Checks that every cell of `region` in `after` lies within the range of
/// `before` over region grown by one cell.
bool maximum_principle_holds(const Snapshot& before, const Snapshot& after, const Box& region);

}  // namespace ptb
