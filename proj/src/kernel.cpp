#include "ptb/kernel.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace ptb {

BlockSize parse_block(const std::string& s) {
  BlockSize bs;
  char x1 = 0, x2 = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c%d%n", &bs.bx, &x1, &bs.by, &x2, &bs.bz, &consumed) != 5 ||
      (x1 != 'x' && x1 != 'X') || (x2 != 'x' && x2 != 'X') || consumed != int(s.size()))
    throw std::invalid_argument("block size must look like BXxBYxBZ: " + s);
  return bs;
}

std::string to_string(const BlockSize& bs) {
  return std::to_string(bs.bx) + "x" + std::to_string(bs.by) + "x" + std::to_string(bs.bz);
}

void validate_block(const BlockSize& bs, const GridDims& dims) {
  for (int d = 0; d < 3; ++d)
    if (bs[d] < 1 || bs[d] > dims.extent(d))
      throw std::invalid_argument("block size " + to_string(bs) +
                                  " must lie between 1 and the interior extents");
}

void sweep_naive(Grid& grid) {
  if (grid.storage() != Storage::two_grid) throw std::logic_error("sweep_naive requires two-grid storage");
  const GridDims& d = grid.dims();
  const double* a = grid.current();
  double* b = grid.array(grid.active() ^ 1);
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i)
        b[grid.index(i, j, k)] =
            stencil_point(a[grid.index(i - 1, j, k)], a[grid.index(i + 1, j, k)],
                          a[grid.index(i, j - 1, k)], a[grid.index(i, j + 1, k)],
                          a[grid.index(i, j, k - 1)], a[grid.index(i, j, k + 1)]);
  grid.swap();
}

namespace {

// `in` and `out` never overlap: out is either another array or a different
// row of the same compressed array.
inline void stencil_row(const double* __restrict in, double* __restrict out, int len,
                        std::ptrdiff_t sy, std::ptrdiff_t sz) {
#pragma omp simd
  for (int i = 0; i < len; ++i)
    out[i] = (((in[i - 1] + in[i + 1]) + (in[i - sy] + in[i + sy])) + (in[i - sz] + in[i + sz])) *
             kSixth;
}

inline void copy_row(const double* __restrict in, double* __restrict out, int len) {
  for (int i = 0; i < len; ++i) out[i] = in[i];
}

void two_grid_box(const Grid& grid, const double* src, double* dst, const Box& b) {
  const auto sy = grid.stride_y();
  const auto sz = grid.stride_z();
  const int len = b.hi.x - b.lo.x;
  if (len <= 0) return;
  for (int k = b.lo.z; k < b.hi.z; ++k)
    for (int j = b.lo.y; j < b.hi.y; ++j) {
      const auto c = grid.index(b.lo.x, j, k);
      stencil_row(src + c, dst + c, len, sy, sz);
    }
}

bool box_inside(const Box& inner, const Box& outer) {
  if (inner.empty()) return true;
  for (int d = 0; d < 3; ++d)
    if (inner.lo[d] < outer.lo[d] || inner.hi[d] > outer.hi[d]) return false;
  return true;
}

}  // namespace

void sweep_spatial_blocked(Grid& grid, const BlockSize& bs) {
  if (grid.storage() != Storage::two_grid)
    throw std::logic_error("sweep_spatial_blocked requires two-grid storage");
  const GridDims& d = grid.dims();
  validate_block(bs, d);
  const double* src = grid.current();
  double* dst = grid.array(grid.active() ^ 1);
  const int nbx = (d.nx + bs.bx - 1) / bs.bx;
  const int nby = (d.ny + bs.by - 1) / bs.by;
  const int nbz = (d.nz + bs.bz - 1) / bs.bz;

#pragma omp parallel for collapse(3) schedule(static)
  for (int kb = 0; kb < nbz; ++kb)
    for (int jb = 0; jb < nby; ++jb)
      for (int ib = 0; ib < nbx; ++ib) {
        const Box b{{ib * bs.bx, jb * bs.by, kb * bs.bz},
                    {std::min(d.nx, (ib + 1) * bs.bx), std::min(d.ny, (jb + 1) * bs.by),
                     std::min(d.nz, (kb + 1) * bs.bz)}};
        two_grid_box(grid, src, dst, b);
      }
  grid.swap();
}

void update_block(Grid& grid, const Box& region, const LevelMode& mode) {
  if (region.empty()) return;
  const GridDims& dims = grid.dims();
  const Box logical = dims.logical_box();
  const Box active = intersect(region, mode.domain);
  if (!box_inside(region, logical) || !box_inside(active.empty() ? active : active.grown(1), logical))
    throw std::out_of_range("update_block: region escapes the allocation");
  if (mode.level < 1) throw std::invalid_argument("update_block: levels are 1-based");

  if (grid.storage() == Storage::two_grid) {
    const int src = (grid.active() + mode.level - 1) & 1;
    two_grid_box(grid, grid.array(src), grid.array(src ^ 1), active);
    return;
  }

  // Compressed: level L reads at origin o + (L-1)s and writes one cell further
  // along the diagonal, s = -1 forward and +1 reverse.
  const int s = mode.direction == Traversal::forward ? -1 : 1;
  const Index3 o = grid.origin_offset();
  const Index3 read_origin{o.x + (mode.level - 1) * s, o.y + (mode.level - 1) * s,
                           o.z + (mode.level - 1) * s};
  const Index3 ext = grid.physical_extents();
  for (int d = 0; d < 3; ++d) {
    const int g = dims.ghost + read_origin[d];
    const int lo = std::min(region.lo[d], active.empty() ? region.lo[d] : active.lo[d] - 1) + g;
    const int hi = std::max(region.hi[d], active.empty() ? region.hi[d] : active.hi[d] + 1) + g;
    if (lo < 0 || hi > ext[d] || region.lo[d] + g + s < 0 || region.hi[d] + g + s > ext[d])
      throw std::out_of_range("update_block: shifted access leaves the compressed allocation");
  }

  double* data = grid.current();
  const auto sy = grid.stride_y();
  const auto sz = grid.stride_z();
  const std::ptrdiff_t delta = s * (1 + sy + sz);

  auto do_row = [&](int j, int k) {
    const bool in_domain = j >= mode.domain.lo.y && j < mode.domain.hi.y &&
                           k >= mode.domain.lo.z && k < mode.domain.hi.z;
    int x0 = region.hi.x, x1 = region.hi.x;
    if (in_domain) {
      x0 = std::clamp(mode.domain.lo.x, region.lo.x, region.hi.x);
      x1 = std::clamp(mode.domain.hi.x, x0, region.hi.x);
    } else {
      x0 = x1 = region.lo.x;
    }
    const auto c = grid.index(region.lo.x, j, k, read_origin);
    const double* in = data + c;
    double* out = data + c + delta;
    const int head = x0 - region.lo.x;
    const int mid = x1 - x0;
    const int tail = region.hi.x - x1;
    if (head > 0) copy_row(in, out, head);
    if (mid > 0) stencil_row(in + head, out + head, mid, sy, sz);
    if (tail > 0) copy_row(in + head + mid, out + head + mid, tail);
  };

  if (s < 0) {
    for (int k = region.lo.z; k < region.hi.z; ++k)
      for (int j = region.lo.y; j < region.hi.y; ++j) do_row(j, k);
  } else {
    for (int k = region.hi.z - 1; k >= region.lo.z; --k)
      for (int j = region.hi.y - 1; j >= region.lo.y; --j) do_row(j, k);
  }
}

}  // namespace ptb
