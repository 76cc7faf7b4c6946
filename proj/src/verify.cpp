#include "ptb/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

#include "ptb/kernel.hpp"

namespace ptb {

Snapshot oracle(const GridDims& dims, const FillPattern& pattern, int levels) {
  if (levels < 0) throw std::invalid_argument("time levels must be non-negative");
  Grid g = Grid::allocate(dims, Storage::two_grid, pattern);
  for (int l = 0; l < levels; ++l) sweep_naive(g);
  return snapshot(g);
}

std::string Comparison::describe() const {
  std::ostringstream os;
  os << (pass ? "pass" : "FAIL") << (bitwise ? " (bitwise)" : "") << " max_abs=" << max_abs
     << " max_rel=" << max_rel << " at (" << location.x << "," << location.y << "," << location.z << ")";
  if (nan_cells) os << " nan_cells=" << nan_cells;
  return os.str();
}

Comparison compare(const Snapshot& a, const Snapshot& b, double tol, bool include_ghosts) {
  if (!(a.dims == b.dims)) throw std::invalid_argument("compare: extents differ");
  if (a.values.size() != b.values.size()) throw std::invalid_argument("compare: value counts differ");
  const Box box = include_ghosts ? a.dims.logical_box() : a.dims.interior();
  Comparison c;
  double worst = -1;  // NaN cells rank above any finite difference
  for (int k = box.lo.z; k < box.hi.z; ++k)
    for (int j = box.lo.y; j < box.hi.y; ++j)
      for (int i = box.lo.x; i < box.hi.x; ++i) {
        const double x = a.values[std::size_t(a.offset(i, j, k))];
        const double y = b.values[std::size_t(b.offset(i, j, k))];
        if (std::bit_cast<std::uint64_t>(x) != std::bit_cast<std::uint64_t>(y)) c.bitwise = false;
        double score;
        if (std::isnan(x) || std::isnan(y)) {
          ++c.nan_cells;
          score = HUGE_VAL;
        } else {
          const double abs = std::fabs(x - y);
          score = abs / std::max({std::fabs(x), std::fabs(y), 1e-300});
          c.max_abs = std::max(c.max_abs, abs);
          c.max_rel = std::max(c.max_rel, score);
        }
        if (score > worst) {
          worst = score;
          c.location = {i, j, k};
        }
      }
  c.pass = c.nan_cells == 0 && c.max_rel <= tol;
  return c;
}

Range value_range(const Snapshot& s, const Box& box) {
  if (box.empty()) throw std::invalid_argument("value_range: empty box");
  Range r{s.at(box.lo.x, box.lo.y, box.lo.z), s.at(box.lo.x, box.lo.y, box.lo.z)};
  for (int k = box.lo.z; k < box.hi.z; ++k)
    for (int j = box.lo.y; j < box.hi.y; ++j)
      for (int i = box.lo.x; i < box.hi.x; ++i) {
        const double v = s.at(i, j, k);
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
      }
  return r;
}

bool maximum_principle_holds(const Snapshot& before, const Snapshot& after, const Box& region) {
  if (!(before.dims == after.dims)) throw std::invalid_argument("maximum principle: extents differ");
  if (region.empty()) return true;
  const Range r = value_range(before, region.grown(1));
  for (int k = region.lo.z; k < region.hi.z; ++k)
    for (int j = region.lo.y; j < region.hi.y; ++j)
      for (int i = region.lo.x; i < region.hi.x; ++i) {
        const double v = after.at(i, j, k);
        if (!(v >= r.min && v <= r.max)) return false;
      }
  return true;
}

}  // namespace ptb
