#include <algorithm>
#include <stdexcept>

#include "ptb/pipeline.hpp"

namespace ptb {

std::vector<LevelGeometry> interior_levels(const GridDims& dims, int levels) {
  const Box interior = dims.interior();
  return std::vector<LevelGeometry>(std::size_t(std::max(levels, 0)),
                                    LevelGeometry{interior, interior.grown(1)});
}

BlockSchedule::BlockSchedule(std::vector<LevelGeometry> levels, const Box& base, const BlockSize& bs,
                             Traversal dir)
    : levels_(std::move(levels)), dir_(dir) {
  if (levels_.empty()) throw std::invalid_argument("schedule needs at least one level");
  if (base.empty()) throw std::invalid_argument("schedule base box is empty");
  for (int d = 0; d < 3; ++d) {
    if (bs[d] < 1) throw std::invalid_argument("block extents must be >= 1");
    counts_[d] = (base.hi[d] - base.lo[d] + bs[d] - 1) / bs[d];
  }
  const int sign = dir == Traversal::forward ? -1 : 1;
  for (int d = 0; d < 3; ++d) {
    auto& per_level = edges_[std::size_t(d)];
    per_level.reserve(levels_.size());
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      const LevelGeometry& g = levels_[l];
      if (g.extent.lo[d] > g.domain.lo[d] || g.extent.hi[d] < g.domain.hi[d] ||
          g.domain.lo[d] >= g.domain.hi[d])
        throw std::invalid_argument("level extent must contain a non-empty domain");
      std::vector<int> e(std::size_t(counts_[d]) + 1);
      e.front() = g.extent.lo[d];
      e.back() = g.extent.hi[d];
      const int shift = sign * int(l);
      for (int a = 1; a < counts_[d]; ++a)
        e[std::size_t(a)] = std::clamp(base.lo[d] + a * bs[d] + shift, g.extent.lo[d], g.extent.hi[d]);
      per_level.push_back(std::move(e));
    }
  }
}

Index3 BlockSchedule::block_at(std::int64_t step) const {
  if (step < 0 || step >= blocks()) throw std::out_of_range("block step outside schedule");
  const std::int64_t s = dir_ == Traversal::forward ? step : blocks() - 1 - step;
  const std::int64_t plane = std::int64_t(counts_.x) * counts_.y;
  return {int(s % counts_.x), int((s / counts_.x) % counts_.y), int(s / plane)};
}

Box BlockSchedule::region(std::int64_t step, int level) const {
  if (level < 1 || level > levels()) throw std::out_of_range("level outside schedule");
  const Index3 b = block_at(step);
  Box r;
  for (int d = 0; d < 3; ++d) {
    const auto& e = edges_[std::size_t(d)][std::size_t(level - 1)];
    r.lo[d] = e[std::size_t(b[d])];
    r.hi[d] = e[std::size_t(b[d]) + 1];
  }
  return r;
}

BlockSchedule build_schedule(const GridDims& dims, const PipelineConfig& cfg, Traversal dir) {
  dims.validate();
  cfg.validate();
  validate_block(cfg.block, dims);
  const int u = cfg.updates_per_sweep();
  if (u > std::min({dims.nx, dims.ny, dims.nz}))
    throw std::invalid_argument("updates per node sweep (" + std::to_string(u) +
                                ") exceed an interior extent");
  return BlockSchedule(interior_levels(dims, u), dims.interior(), cfg.block, dir);
}

bool validate_partition(const BlockSchedule& schedule, int level) {
  const Box ext = schedule.level(level).extent;
  if (ext.empty()) return false;
  const int ex = ext.hi.x - ext.lo.x;
  const int ey = ext.hi.y - ext.lo.y;
  std::vector<int> hits(std::size_t(ext.volume()), 0);
  for (std::int64_t b = 0; b < schedule.blocks(); ++b) {
    const Box r = schedule.region(b, level);
    if (r.empty()) continue;
    for (int d = 0; d < 3; ++d)
      if (r.lo[d] < ext.lo[d] || r.hi[d] > ext.hi[d]) return false;
    for (int k = r.lo.z; k < r.hi.z; ++k)
      for (int j = r.lo.y; j < r.hi.y; ++j)
        for (int i = r.lo.x; i < r.hi.x; ++i)
          ++hits[std::size_t((std::int64_t(k - ext.lo.z) * ey + (j - ext.lo.y)) * ex + (i - ext.lo.x))];
  }
  return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}

}  // namespace ptb
