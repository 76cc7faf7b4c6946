#include "ptb/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ptb {

Layout parse_layout(const std::string& s) {
  Layout l;
  char x1 = 0, x2 = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c%d%n", &l.px, &x1, &l.py, &x2, &l.pz, &consumed) != 5 ||
      (x1 != 'x' && x1 != 'X') || (x2 != 'x' && x2 != 'X') || consumed != int(s.size()))
    throw std::invalid_argument("layout must look like PXxPYxPZ: " + s);
  if (l.px < 1 || l.py < 1 || l.pz < 1) throw std::invalid_argument("layout factors must be >= 1");
  return l;
}

std::string to_string(const Layout& l) {
  return std::to_string(l.px) + "x" + std::to_string(l.py) + "x" + std::to_string(l.pz);
}

Layout balanced_layout(int ranks) {
  if (ranks < 1) throw std::invalid_argument("rank count must be >= 1");
  Layout best{ranks, 1, 1};
  int best_spread = ranks - 1;
  for (int pz = 1; pz * pz * pz <= ranks; ++pz) {
    if (ranks % pz) continue;
    for (int py = pz; py * py <= ranks / pz; ++py) {
      if ((ranks / pz) % py) continue;
      const int px = ranks / pz / py;
      if (px - pz < best_spread) {
        best_spread = px - pz;
        best = {px, py, pz};
      }
    }
  }
  return best;
}

int RankInfo::neighbor_count() const {
  return int(std::count_if(neighbor.begin(), neighbor.end(), [](int r) { return r != kNoNeighbor; }));
}

int Decomposition::rank_of(Index3 c) const {
  for (int d = 0; d < 3; ++d)
    if (c[d] < 0 || c[d] >= layout[d]) return kNoNeighbor;
  return c.x + layout.px * (c.y + layout.py * c.z);
}

Decomposition decompose(const GridDims& global, const Layout& layout, int halo) {
  global.validate();
  if (layout.px < 1 || layout.py < 1 || layout.pz < 1)
    throw std::invalid_argument("layout factors must be >= 1");
  if (halo < 1) throw std::invalid_argument("halo width must be >= 1");
  for (int d = 0; d < 3; ++d) {
    if (layout[d] == 1) continue;
    const int smallest = global.extent(d) / layout[d];
    if (smallest < halo)
      throw std::invalid_argument("layout " + to_string(layout) + " leaves " + std::to_string(smallest) +
                                  " cells along axis " + std::to_string(d) + ", fewer than the halo width " +
                                  std::to_string(halo));
  }

  Decomposition dec{global, layout, halo, {}};
  dec.ranks.resize(std::size_t(layout.ranks()));
  for (int cz = 0; cz < layout.pz; ++cz)
    for (int cy = 0; cy < layout.py; ++cy)
      for (int cx = 0; cx < layout.px; ++cx) {
        const Index3 c{cx, cy, cz};
        RankInfo& r = dec.ranks[std::size_t(dec.rank_of(c))];
        r.rank = dec.rank_of(c);
        r.coord = c;
        int ext[3];
        for (int d = 0; d < 3; ++d) {
          const int n = global.extent(d), p = layout[d];
          const int base = n / p, rem = n % p;
          ext[d] = base + (c[d] < rem ? 1 : 0);
          r.offset[d] = c[d] * base + std::min(c[d], rem);
        }
        r.dims = {ext[0], ext[1], ext[2], halo};
        for (int d = 0; d < 3; ++d)
          for (int high = 0; high < 2; ++high) {
            Index3 nc = c;
            nc[d] += high ? 1 : -1;
            r.neighbor[std::size_t(make_face(d, high))] = dec.rank_of(nc);
          }
      }
  return dec;
}

HaloPlan HaloPlan::directional(int depth) {
  if (depth < 1) throw std::invalid_argument("halo depth must be >= 1");
  HaloPlan p;
  p.depth = depth;
  p.phases = {HaloPhase{0, {false, false, false}}, HaloPhase{1, {true, false, false}},
              HaloPhase{2, {true, true, false}}};
  return p;
}

HaloPlan HaloPlan::reordered(std::array<int, 3> order) const {
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<int, 3>{0, 1, 2}) throw std::invalid_argument("phase order must permute x, y, z");
  HaloPlan p = *this;
  for (int i = 0; i < 3; ++i) {
    auto it = std::find_if(phases.begin(), phases.end(), [&](const HaloPhase& ph) { return ph.axis == order[std::size_t(i)]; });
    p.phases[std::size_t(i)] = *it;
  }
  return p;
}

void exchange_halos(Grid& grid, const RankInfo& info, const HaloPlan& plan, Endpoint& ep,
                    std::uint32_t step) {
  for (const HaloPhase& phase : plan.phases) {
    const int a = phase.axis;
    const bool low_first = info.coord[a] % 2 == 0;
    for (bool high : {!low_first, low_first}) {
      const Face face = make_face(a, high);
      const int peer = info.neighbor[std::size_t(face)];
      if (peer == kNoNeighbor) continue;
      ep.send(peer, make_message(step, a, high ? 1 : 0, plan.depth,
                                 extract_layers(grid, face, plan.depth, phase.extent)));
      const Box ghost = ghost_slab(grid.dims(), face, plan.depth, phase.extent);
      const auto payload =
          ep.recv(peer, Expected{step, a, high ? 0 : 1, plan.depth, 8 * std::uint64_t(ghost.volume())});
      inject_layers(grid, face, plan.depth, phase.extent, payload);
    }
  }
}

std::vector<LevelGeometry> shrinking_levels(const RankInfo& info, int halo) {
  if (halo < 1) throw std::invalid_argument("halo width must be >= 1");
  if (halo > info.dims.ghost) throw std::invalid_argument("halo width exceeds the ghost shell");
  std::vector<LevelGeometry> levels;
  levels.reserve(std::size_t(halo));
  Box extent = info.dims.interior();
  for (int d = 0; d < 3; ++d) {
    extent.lo[d] -= info.has_neighbor(make_face(d, false)) ? halo - 1 : 1;
    extent.hi[d] += info.has_neighbor(make_face(d, true)) ? halo - 1 : 1;
  }
  for (int s = 1; s <= halo; ++s) {
    Box domain = info.dims.interior();
    for (int d = 0; d < 3; ++d) {
      if (info.has_neighbor(make_face(d, false))) domain.lo[d] -= halo - s;
      if (info.has_neighbor(make_face(d, true))) domain.hi[d] += halo - s;
    }
    levels.push_back({domain, extent});
  }
  return levels;
}

void outer_step(Grid& grid, const RankInfo& info, const PipelineConfig& cfg, int halo) {
  cfg.validate();
  const int u = cfg.updates_per_sweep();
  if (halo % u != 0)
    throw std::invalid_argument("halo width must be a multiple of the updates per node sweep");
  const auto levels = shrinking_levels(info, halo);
  for (int q = 0; q < halo / u; ++q) {
    std::vector<LevelGeometry> sweep(levels.begin() + q * u, levels.begin() + (q + 1) * u);
    const Box base = sweep.front().domain;
    BlockSize bs = cfg.block;
    bs.bx = std::min(bs.bx, base.hi.x - base.lo.x);
    bs.by = std::min(bs.by, base.hi.y - base.lo.y);
    bs.bz = std::min(bs.bz, base.hi.z - base.lo.z);
    const BlockSchedule schedule(std::move(sweep), base, bs, grid.next_traversal(u));
    run_sweep(grid, schedule, cfg, q);
  }
}

Grid make_local_grid(const Snapshot& global, const RankInfo& info, Storage storage, int slack) {
  Grid g = Grid::allocate(info.dims, storage, FillPattern::constant(0.0), slack);
  const Box global_interior = global.dims.interior();
  const Box global_box = global.dims.logical_box();
  const Box local = info.dims.logical_box();
  const Box local_interior = info.dims.interior();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int k = local.lo.z; k < local.hi.z; ++k)
    for (int j = local.lo.y; j < local.hi.y; ++j)
      for (int i = local.lo.x; i < local.hi.x; ++i) {
        const int gi = i + info.offset.x, gj = j + info.offset.y, gk = k + info.offset.z;
        double v = 0.0;
        if (global_interior.contains(gi, gj, gk))
          v = local_interior.contains(i, j, k) ? global.at(gi, gj, gk) : nan;
        else if (global_box.contains(gi, gj, gk))
          v = global.at(gi, gj, gk);
        g.initialize_cell(i, j, k, v);
      }
  return g;
}

namespace {

struct RankOutput {
  RankReport report;
  std::vector<double> interior;
};

}  // namespace

DistributedResult run_distributed(const GridDims& global, const FillPattern& pattern,
                                  const Layout& layout, const PipelineConfig& cfg, int outer_steps,
                                  const DistributedOptions& opts) {
  cfg.validate();
  if (outer_steps < 0) throw std::invalid_argument("outer step count must be non-negative");
  if (opts.batch < 1) throw std::invalid_argument("batch must be >= 1");
  const int u = cfg.updates_per_sweep();
  const int halo = u * opts.batch;
  const GridDims gdims{global.nx, global.ny, global.nz, 1};
  Decomposition dec = decompose(gdims, layout, halo);
  const HaloPlan plan = HaloPlan::directional(halo).reordered(opts.phase_order);
  const Snapshot initial = snapshot(Grid::allocate(gdims, Storage::two_grid, pattern));

  auto program = [&](Endpoint& ep) {
    const RankInfo& info = dec.ranks[std::size_t(ep.rank())];
    Grid g = make_local_grid(initial, info, cfg.storage, cfg.storage == Storage::compressed ? u : 0);

    std::vector<int> peers;
    for (int r : info.neighbor)
      if (r != kNoNeighbor) peers.push_back(r);
    ep.declare_neighbors(peers);

    RankOutput out;
    out.report.rank = info.rank;
    out.report.coord = info.coord;
    out.report.dims = info.dims;
    out.report.neighbors = info.neighbor_count();
    for (int step = 0; step < outer_steps; ++step) {
      const auto before = ep.stats().messages_sent;
      exchange_halos(g, info, plan, ep, std::uint32_t(step));
      out.report.messages_per_round.push_back(ep.stats().messages_sent - before);
      outer_step(g, info, cfg, halo);
    }
    out.report.stats = ep.stats();
    out.interior.reserve(std::size_t(info.dims.interior_cells()));
    for (int k = 0; k < info.dims.nz; ++k)
      for (int j = 0; j < info.dims.ny; ++j)
        for (int i = 0; i < info.dims.nx; ++i) out.interior.push_back(g.value_at(i, j, k));
    return out;
  };

  auto outputs = spawn_world(layout.ranks(), program);

  DistributedResult result{std::move(dec), initial, {}};
  for (auto& o : outputs) {
    const RankInfo& info = result.decomposition.ranks[std::size_t(o.report.rank)];
    std::size_t pos = 0;
    for (int k = 0; k < info.dims.nz; ++k)
      for (int j = 0; j < info.dims.ny; ++j)
        for (int i = 0; i < info.dims.nx; ++i)
          result.gathered.values[std::size_t(
              result.gathered.offset(i + info.offset.x, j + info.offset.y, k + info.offset.z))] =
              o.interior[pos++];
    result.ranks.push_back(std::move(o.report));
  }
  return result;
}

}  // namespace ptb
