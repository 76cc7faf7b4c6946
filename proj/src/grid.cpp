#include "ptb/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ptb {

Box intersect(const Box& a, const Box& b) {
  Box r;
  for (int d = 0; d < 3; ++d) {
    r.lo[d] = std::max(a.lo[d], b.lo[d]);
    r.hi[d] = std::min(a.hi[d], b.hi[d]);
  }
  return r;
}

void GridDims::validate() const {
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("grid extents must be >= 1");
  if (ghost < 1) throw std::invalid_argument("ghost width must be >= 1");
}

GridDims cube(int n, int ghost) { return {n, n, n, ghost}; }

std::string to_string(Storage s) { return s == Storage::two_grid ? "twogrid" : "compressed"; }

Storage parse_storage(const std::string& s) {
  if (s == "twogrid" || s == "two-grid") return Storage::two_grid;
  if (s == "compressed") return Storage::compressed;
  throw std::invalid_argument("unknown storage mode: " + s);
}

std::string FillPattern::name() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::constant: os << "constant(" << value_ << ")"; break;
    case Kind::linear: os << "linear"; break;
    case Kind::hotplate: os << "hotplate"; break;
    case Kind::random: os << "random(" << seed_ << ")"; break;
  }
  return os.str();
}

FillPattern parse_pattern(const std::string& s) {
  auto arg = [&](std::size_t open) {
    auto close = s.find(')', open);
    if (close == std::string::npos) throw std::invalid_argument("bad pattern: " + s);
    return s.substr(open + 1, close - open - 1);
  };
  if (s == "linear") return FillPattern::linear();
  if (s == "hotplate") return FillPattern::hotplate();
  if (s.rfind("constant(", 0) == 0) return FillPattern::constant(std::stod(arg(8)));
  if (s.rfind("random(", 0) == 0) return FillPattern::random(std::stoull(arg(6)));
  if (s == "random") return FillPattern::random(0);
  throw std::invalid_argument("unknown fill pattern: " + s);
}

Grid Grid::allocate(const GridDims& dims, Storage mode, const FillPattern& pattern, int slack) {
  dims.validate();
  if (slack < 0) throw std::invalid_argument("slack must be non-negative");
  if (mode == Storage::two_grid) slack = 0;

  Grid g;
  g.dims_ = dims;
  g.storage_ = mode;
  g.slack_ = slack;

  constexpr auto limit = std::uint64_t(std::numeric_limits<std::ptrdiff_t>::max() / sizeof(double));
  std::uint64_t total = 1;
  for (int d = 0; d < 3; ++d) {
    const std::uint64_t e = std::uint64_t(dims.extent(d)) + 2 * std::uint64_t(dims.ghost) +
                            std::uint64_t(slack);
    if (e > std::uint64_t(std::numeric_limits<int>::max()) || total > limit / e)
      throw std::length_error("grid allocation overflows address arithmetic");
    total *= e;
    g.ext_[d] = int(e);
  }
  g.origin_ = {slack, slack, slack};

  g.a_.assign(total, 0.0);
  if (mode == Storage::two_grid) g.b_.assign(total, 0.0);

  std::mt19937_64 rng(pattern.seed());
  const Box box = dims.logical_box();
  for (int k = box.lo.z; k < box.hi.z; ++k)
    for (int j = box.lo.y; j < box.hi.y; ++j)
      for (int i = box.lo.x; i < box.hi.x; ++i) {
        double v = 0.0;
        switch (pattern.kind()) {
          case FillPattern::Kind::constant: v = pattern.value(); break;
          case FillPattern::Kind::linear: v = double(i + j + k); break;
          case FillPattern::Kind::hotplate: v = (k == -1) ? 1.0 : 0.0; break;
          case FillPattern::Kind::random: v = double(rng() >> 11) * 0x1.0p-53; break;
        }
        g.initialize_cell(i, j, k, v);
      }
  return g;
}

double Grid::value_at(int i, int j, int k) const {
  if (!in_logical_box(i, j, k)) throw std::out_of_range("value_at: index outside logical box");
  return current()[index(i, j, k)];
}

void Grid::set_value_at(int i, int j, int k, double v) {
  if (!in_logical_box(i, j, k)) throw std::out_of_range("set_value_at: index outside logical box");
  current()[index(i, j, k)] = v;
}

void Grid::initialize_cell(int i, int j, int k, double v) {
  if (!in_logical_box(i, j, k)) throw std::out_of_range("initialize_cell: index outside logical box");
  const auto idx = index(i, j, k);
  a_[idx] = v;
  if (storage_ == Storage::two_grid) b_[idx] = v;
}

void Grid::swap() {
  if (storage_ != Storage::two_grid) throw std::logic_error("swap requires two-grid storage");
  active_ ^= 1;
}

void Grid::shift_origin(int delta) {
  if (storage_ != Storage::compressed) throw std::logic_error("shift_origin requires compressed storage");
  for (int d = 0; d < 3; ++d) {
    const int o = origin_[d] + delta;
    if (o < 0 || o > slack_) throw std::out_of_range("origin offset would leave the slack range");
    origin_[d] = o;
  }
}

void Grid::recenter(int offset) {
  if (storage_ != Storage::compressed) throw std::logic_error("recenter requires compressed storage");
  if (offset < 0 || offset > slack_) throw std::out_of_range("recenter offset outside slack range");
  const Snapshot s = snapshot(*this);
  origin_ = {offset, offset, offset};
  const Box box = dims_.logical_box();
  for (int k = box.lo.z; k < box.hi.z; ++k)
    for (int j = box.lo.y; j < box.hi.y; ++j)
      for (int i = box.lo.x; i < box.hi.x; ++i) a_[index(i, j, k)] = s.at(i, j, k);
}

Traversal Grid::next_traversal(int levels) const {
  if (storage_ == Storage::two_grid) return Traversal::forward;
  const int o = origin_.x;
  if (origin_.y != o || origin_.z != o)
    throw std::logic_error("compressed sweeps require a diagonal origin offset");
  if (o >= levels) return Traversal::forward;
  if (o + levels <= slack_) return Traversal::reverse;
  throw std::invalid_argument("compressed grid slack too small for the requested levels");
}

void Grid::advance(int levels, Traversal dir) {
  if (storage_ == Storage::two_grid) {
    active_ = (active_ + levels) & 1;
    return;
  }
  shift_origin(dir == Traversal::forward ? -levels : levels);
}

Face opposite(Face f) { return make_face(face_axis(f), !face_is_high(f)); }

namespace {

Box slab(const GridDims& dims, Face face, int depth, SlabExtent ext, bool ghost_side) {
  if (depth < 1 || depth > dims.ghost)
    throw std::invalid_argument("slab depth must lie in [1, ghost width]");
  const int axis = face_axis(face);
  Box b = dims.interior();
  for (int d = 0; d < 3; ++d) {
    if (d == axis || !ext[d]) continue;
    b.lo[d] -= depth;
    b.hi[d] += depth;
  }
  const int n = dims.extent(axis);
  if (face_is_high(face)) {
    b.lo[axis] = ghost_side ? n : n - depth;
    b.hi[axis] = b.lo[axis] + depth;
  } else {
    b.lo[axis] = ghost_side ? -depth : 0;
    b.hi[axis] = b.lo[axis] + depth;
  }
  if (!ghost_side && depth > n) throw std::invalid_argument("slab depth exceeds interior extent");
  return b;
}

}  // namespace

Box interior_slab(const GridDims& dims, Face face, int depth, SlabExtent ext) {
  return slab(dims, face, depth, ext, false);
}

Box ghost_slab(const GridDims& dims, Face face, int depth, SlabExtent ext) {
  return slab(dims, face, depth, ext, true);
}

std::vector<double> extract_layers(const Grid& grid, Face face, int depth, SlabExtent ext) {
  const Box b = interior_slab(grid.dims(), face, depth, ext);
  std::vector<double> out;
  out.reserve(std::size_t(b.volume()));
  const double* src = grid.current();
  for (int k = b.lo.z; k < b.hi.z; ++k)
    for (int j = b.lo.y; j < b.hi.y; ++j) {
      const double* row = src + grid.index(b.lo.x, j, k);
      out.insert(out.end(), row, row + (b.hi.x - b.lo.x));
    }
  return out;
}

void inject_layers(Grid& grid, Face face, int depth, SlabExtent ext, std::span<const double> values) {
  const Box b = ghost_slab(grid.dims(), face, depth, ext);
  if (values.size() != std::size_t(b.volume()))
    throw std::invalid_argument("inject_layers: slab size mismatch");
  double* dst = grid.current();
  std::size_t pos = 0;
  const int len = b.hi.x - b.lo.x;
  for (int k = b.lo.z; k < b.hi.z; ++k)
    for (int j = b.lo.y; j < b.hi.y; ++j) {
      std::copy_n(values.data() + pos, len, dst + grid.index(b.lo.x, j, k));
      pos += std::size_t(len);
    }
}

std::ptrdiff_t Snapshot::offset(int i, int j, int k) const {
  const int g = dims.ghost;
  const std::ptrdiff_t ex = dims.nx + 2 * g;
  const std::ptrdiff_t ey = dims.ny + 2 * g;
  return ((k + g) * ey + (j + g)) * ex + (i + g);
}

double Snapshot::at(int i, int j, int k) const {
  if (!dims.logical_box().contains(i, j, k)) throw std::out_of_range("Snapshot::at");
  return values[std::size_t(offset(i, j, k))];
}

Snapshot snapshot(const Grid& grid) {
  Snapshot s;
  s.dims = grid.dims();
  const Box box = s.dims.logical_box();
  s.values.reserve(std::size_t(box.volume()));
  const double* src = grid.current();
  for (int k = box.lo.z; k < box.hi.z; ++k)
    for (int j = box.lo.y; j < box.hi.y; ++j) {
      const double* row = src + grid.index(box.lo.x, j, k);
      s.values.insert(s.values.end(), row, row + (box.hi.x - box.lo.x));
    }
  return s;
}

void write_dump(std::ostream& os, const Snapshot& s) {
  os << s.dims.nx << ' ' << s.dims.ny << ' ' << s.dims.nz << ' ' << s.dims.ghost << '\n';
  char buf[40];
  for (double v : s.values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
}

Snapshot read_dump(std::istream& is) {
  Snapshot s;
  if (!(is >> s.dims.nx >> s.dims.ny >> s.dims.nz >> s.dims.ghost))
    throw std::runtime_error("dump: malformed header");
  s.dims.validate();
  const auto count = std::size_t(s.dims.logical_box().volume());
  s.values.reserve(count);
  std::string tok;
  while (s.values.size() < count && is >> tok) s.values.push_back(std::strtod(tok.c_str(), nullptr));
  if (s.values.size() != count) throw std::runtime_error("dump: truncated value list");
  return s;
}

void write_dump_file(const std::string& path, const Snapshot& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_dump(os, s);
}

Snapshot read_dump_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_dump(is);
}

}  // namespace ptb
