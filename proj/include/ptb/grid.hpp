#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ptb {

struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;

  int& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  friend bool operator==(const Index3&, const Index3&) = default;
};

/// Half-open box [lo, hi) in logical cell coordinates.
struct Box {
  Index3 lo;
  Index3 hi;

  bool empty() const { return lo.x >= hi.x || lo.y >= hi.y || lo.z >= hi.z; }
  std::int64_t volume() const {
    if (empty()) return 0;
    return std::int64_t(hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z);
  }
  bool contains(int i, int j, int k) const {
    return i >= lo.x && i < hi.x && j >= lo.y && j < hi.y && k >= lo.z && k < hi.z;
  }
  Box grown(int layers) const {
    return {{lo.x - layers, lo.y - layers, lo.z - layers},
            {hi.x + layers, hi.y + layers, hi.z + layers}};
  }
  friend bool operator==(const Box&, const Box&) = default;
};

Box intersect(const Box& a, const Box& b);

struct GridDims {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  int ghost = 1;

  int extent(int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
  std::int64_t interior_cells() const { return std::int64_t(nx) * ny * nz; }
  Box interior() const { return {{0, 0, 0}, {nx, ny, nz}}; }
  /// Interior plus the ghost shell.
  Box logical_box() const { return interior().grown(ghost); }
  /// Throws std::invalid_argument unless all extents and the ghost width are >= 1.
  void validate() const;
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

GridDims cube(int n, int ghost = 1);

enum class Storage { two_grid, compressed };
enum class Traversal { forward, reverse };

std::string to_string(Storage s);
Storage parse_storage(const std::string& s);

/// Initial field. Ghost cells receive the same pattern and act as fixed
/// Dirichlet values afterwards.
class FillPattern {
 public:
  enum class Kind { constant, linear, hotplate, random };

  static FillPattern constant(double v) { return {Kind::constant, v, 0}; }
  /// value = i + j + k; harmonic for the 6-point mean.
  static FillPattern linear() { return {Kind::linear, 0.0, 0}; }
  /// z-low ghost plane = 1, everything else 0.
  static FillPattern hotplate() { return {Kind::hotplate, 0.0, 0}; }
  /// Uniform [0,1) from a seeded mt19937_64, drawn in row-major order over the logical box.
  static FillPattern random(std::uint64_t seed) { return {Kind::random, 0.0, seed}; }

  Kind kind() const { return kind_; }
  double value() const { return value_; }
  std::uint64_t seed() const { return seed_; }
  std::string name() const;

 private:
  FillPattern(Kind k, double v, std::uint64_t s) : kind_(k), value_(v), seed_(s) {}
  Kind kind_;
  double value_;
  std::uint64_t seed_;
};

FillPattern parse_pattern(const std::string& s);

/// 3D scalar field with a ghost shell, stored either as two ping-pong arrays
/// or as a single compressed array whose logical origin drifts diagonally by
/// one cell per time level.
///
/// Logical cell (i,j,k) lives at physical (i+g+o.x, j+g+o.y, k+g+o.z) where g is
/// the ghost width and o the origin offset (always zero in two-grid mode).
/// Physical extents are n + 2g + slack per dimension.
class Grid {
 public:
  static Grid allocate(const GridDims& dims, Storage mode, const FillPattern& pattern,
                       int slack = 0);

  const GridDims& dims() const { return dims_; }
  Storage storage() const { return storage_; }
  int slack() const { return slack_; }
  Index3 origin_offset() const { return origin_; }
  int active() const { return active_; }
  Index3 physical_extents() const { return ext_; }

  std::ptrdiff_t stride_y() const { return ext_.x; }
  std::ptrdiff_t stride_z() const { return std::ptrdiff_t(ext_.x) * ext_.y; }

  /// Linear physical index of logical cell (i,j,k) for the given origin offset.
  std::ptrdiff_t index(int i, int j, int k, Index3 origin) const {
    const int g = dims_.ghost;
    return (std::ptrdiff_t(k + g + origin.z) * ext_.y + (j + g + origin.y)) * ext_.x +
           (i + g + origin.x);
  }
  std::ptrdiff_t index(int i, int j, int k) const { return index(i, j, k, origin_); }

  /// Range-checked read of the current time level; throws std::out_of_range.
  double value_at(int i, int j, int k) const;
  /// Writes the current time level only.
  void set_value_at(int i, int j, int k, double v);
  /// Writes every stored copy of a cell (both arrays in two-grid mode).
  void initialize_cell(int i, int j, int k, double v);

  double* array(int which) { return which == 0 ? a_.data() : b_.data(); }
  const double* array(int which) const { return which == 0 ? a_.data() : b_.data(); }
  double* current() { return array(active_); }
  const double* current() const { return array(active_); }

  /// Two-grid: swap the current array.
  void swap();
  /// Compressed: move the logical origin by delta in every dimension
  /// (bookkeeping only; data stays where it is).
  void shift_origin(int delta);
  /// Compressed: move the data so that the logical field is unchanged but the
  /// origin offset becomes `offset` in every dimension.
  void recenter(int offset);

  /// Direction the next pipeline sweep of `levels` updates must use.
  Traversal next_traversal(int levels) const;
  /// Commits `levels` time levels applied by a sweep that started at the current state.
  void advance(int levels, Traversal dir);

  bool in_logical_box(int i, int j, int k) const { return dims_.logical_box().contains(i, j, k); }

 private:
  Grid() = default;

  GridDims dims_;
  Storage storage_ = Storage::two_grid;
  int slack_ = 0;
  Index3 ext_;
  Index3 origin_;
  int active_ = 0;
  std::vector<double> a_;
  std::vector<double> b_;
};

enum class Face { x_lo, x_hi, y_lo, y_hi, z_lo, z_hi };

inline int face_axis(Face f) { return static_cast<int>(f) / 2; }
inline bool face_is_high(Face f) { return static_cast<int>(f) % 2 == 1; }
inline Face make_face(int axis, bool high) { return static_cast<Face>(axis * 2 + (high ? 1 : 0)); }
Face opposite(Face f);

/// Per tangential direction, whether a slab also covers the ghost extension
/// (depth cells on both sides).
struct SlabExtent {
  bool x = false;
  bool y = false;
  bool z = false;
  bool operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
};

/// Interior layers adjacent to `face`.
Box interior_slab(const GridDims& dims, Face face, int depth, SlabExtent ext);
/// Ghost layers just beyond `face`.
Box ghost_slab(const GridDims& dims, Face face, int depth, SlabExtent ext);

/// Packs the `depth` interior layers next to `face`, x fastest.
std::vector<double> extract_layers(const Grid& grid, Face face, int depth, SlabExtent ext = {});
/// Unpacks into the `depth` ghost layers beyond `face`; layout as extract_layers.
void inject_layers(Grid& grid, Face face, int depth, SlabExtent ext, std::span<const double> values);

/// Copy of the current logical box (ghosts included), row-major, x fastest.
struct Snapshot {
  GridDims dims;
  std::vector<double> values;

  double at(int i, int j, int k) const;
  std::ptrdiff_t offset(int i, int j, int k) const;
};

Snapshot snapshot(const Grid& grid);

/// Dump format: header `nx ny nz ghost`, then one value per line in row-major
/// order over the logical box, printed with 17 significant digits.
void write_dump(std::ostream& os, const Snapshot& s);
Snapshot read_dump(std::istream& is);
void write_dump_file(const std::string& path, const Snapshot& s);
Snapshot read_dump_file(const std::string& path);

}  // namespace ptb
