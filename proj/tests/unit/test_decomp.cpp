#include <cmath>

#include "doctest.h"
#include "ptb/decomp.hpp"
#include "ptb/verify.hpp"
#include "support.hpp"

using namespace ptb;

namespace {

PipelineConfig cfg_for(int n, int t, int T, Storage st = Storage::two_grid) {
  PipelineConfig c;
  c.teams = n;
  c.team_size = t;
  c.updates_per_thread = T;
  c.du = 2;
  c.storage = st;
  return c;
}

// Runs exchange_halos once on every rank of `dec` with locals cut from `global`.
std::vector<Snapshot> exchange_once(const Decomposition& dec, const Snapshot& global,
                                    std::array<int, 3> order = {0, 1, 2}) {
  const HaloPlan plan = HaloPlan::directional(dec.halo).reordered(order);
  return spawn_world(dec.layout.ranks(), [&](Endpoint& ep) {
    const RankInfo& info = dec.ranks[std::size_t(ep.rank())];
    Grid g = make_local_grid(global, info, Storage::two_grid);
    exchange_halos(g, info, plan, ep, 0);
    return snapshot(g);
  });
}

}  // namespace

TEST_CASE("layout parsing and balancing") {
  CHECK(parse_layout("2x1x4") == Layout{2, 1, 4});
  CHECK_THROWS_AS(parse_layout("2x2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_layout("0x1x1"), std::invalid_argument);
  CHECK(to_string(Layout{1, 2, 2}) == "1x2x2");
  CHECK(balanced_layout(8) == Layout{2, 2, 2});
  CHECK(balanced_layout(12) == Layout{3, 2, 2});
  CHECK(balanced_layout(7) == Layout{7, 1, 1});
  CHECK(balanced_layout(1) == Layout{1, 1, 1});
}

TEST_CASE("even split") {
  const Decomposition d = decompose(cube(48), {2, 1, 1}, 1);
  REQUIRE(d.ranks.size() == 2);
  CHECK(d.ranks[0].dims == GridDims{24, 48, 48, 1});
  CHECK(d.ranks[1].dims == GridDims{24, 48, 48, 1});
  CHECK(d.ranks[1].offset == Index3{24, 0, 0});
  CHECK(d.ranks[0].neighbor[std::size_t(Face::x_hi)] == 1);
  CHECK(d.ranks[1].neighbor[std::size_t(Face::x_lo)] == 0);
  CHECK(d.ranks[0].neighbor_count() == 1);
}

TEST_CASE("remainder goes to the low ranks") {
  const Decomposition d = decompose(cube(49), {2, 1, 1}, 1);
  CHECK(d.ranks[0].dims.nx == 25);
  CHECK(d.ranks[1].dims.nx == 24);
  CHECK(d.ranks[0].dims.ny == 49);
  CHECK(d.ranks[1].offset.x == 25);
}

TEST_CASE("ranks thinner than the halo are rejected") {
  CHECK_THROWS_AS(decompose(cube(16), {1, 1, 4}, 8), std::invalid_argument);
  CHECK_NOTHROW(decompose(cube(16), {1, 1, 2}, 8));
  CHECK_NOTHROW(decompose(cube(4), {1, 1, 1}, 8));
}

TEST_CASE("random decompositions cover the domain once with symmetric neighbours") {
  test::Rng r(41);
  for (int trial = 0; trial < 40; ++trial) {
    const Layout l{r.uniform(1, 3), r.uniform(1, 3), r.uniform(1, 3)};
    const GridDims g = test::random_dims(r, 3, 14);
    Decomposition d;
    try {
      d = decompose(g, l, 1);
    } catch (const std::invalid_argument&) {
      CHECK((g.nx < l.px || g.ny < l.py || g.nz < l.pz));
      continue;
    }
    std::vector<int> owner(std::size_t(g.interior_cells()), 0);
    for (const RankInfo& info : d.ranks) {
      for (int k = 0; k < info.dims.nz; ++k)
        for (int j = 0; j < info.dims.ny; ++j)
          for (int i = 0; i < info.dims.nx; ++i)
            ++owner[std::size_t(((k + info.offset.z) * g.ny + j + info.offset.y) * g.nx + i + info.offset.x)];
      for (int f = 0; f < 6; ++f) {
        const int n = info.neighbor[std::size_t(f)];
        if (n == kNoNeighbor) continue;
        CHECK(d.ranks[std::size_t(n)].neighbor[std::size_t(opposite(Face(f)))] == info.rank);
      }
      for (int a = 0; a < 3; ++a) CHECK(std::abs(info.dims.extent(a) - g.extent(a) / l[a]) <= 1);
    }
    CHECK(std::all_of(owner.begin(), owner.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("exchange between two ranks filled with their rank id") {
  const Decomposition dec = decompose({8, 4, 4, 1}, {2, 1, 1}, 2);
  const auto out = spawn_world(2, [&](Endpoint& ep) {
    const RankInfo& info = dec.ranks[std::size_t(ep.rank())];
    Grid g = Grid::allocate(info.dims, Storage::two_grid, FillPattern::constant(double(ep.rank())));
    exchange_halos(g, info, HaloPlan::directional(2), ep, 0);
    return snapshot(g);
  });
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int d = 1; d <= 2; ++d) {
        CHECK(out[0].at(3 + d, j, k) == 1.0);
        CHECK(out[1].at(-d, j, k) == 0.0);
      }
}

TEST_CASE("a lone rank sends nothing and keeps its ghosts") {
  const Decomposition dec = decompose(cube(6), {1, 1, 1}, 2);
  const auto out = spawn_world(1, [&](Endpoint& ep) {
    Grid g = Grid::allocate(dec.ranks[0].dims, Storage::two_grid, FillPattern::random(3));
    const Snapshot before = snapshot(g);
    exchange_halos(g, dec.ranks[0], HaloPlan::directional(2), ep, 0);
    return std::pair{ep.stats().messages_sent, compare(snapshot(g), before, 0.0, true).bitwise};
  });
  CHECK(out[0].first == 0);
  CHECK(out[0].second);
}

TEST_CASE("2x2x1 exchange of a linear field fills every ghost with the global function") {
  for (int h : {1, 2, 3}) {
    const GridDims gd{10, 9, 6, 1};
    const Decomposition dec = decompose(gd, {2, 2, 1}, h);
    const Snapshot global = snapshot(Grid::allocate(gd, Storage::two_grid, FillPattern::linear()));
    const auto out = exchange_once(dec, global);
    for (const RankInfo& info : dec.ranks) {
      const Snapshot& s = out[std::size_t(info.rank)];
      const Box box = info.dims.logical_box();
      int checked = 0;
      bool ok = true;
      for (int k = box.lo.z; k < box.hi.z; ++k)
        for (int j = box.lo.y; j < box.hi.y; ++j)
          for (int i = box.lo.x; i < box.hi.x; ++i) {
            const Index3 gi{i + info.offset.x, j + info.offset.y, k + info.offset.z};
            if (!gd.logical_box().contains(gi.x, gi.y, gi.z)) continue;
            ok = ok && s.at(i, j, k) == double(gi.x + gi.y + gi.z);
            ++checked;
          }
      CAPTURE(h);
      CHECK(ok);
      CHECK(checked > 0);
    }
  }
}

TEST_CASE("shuffled phases leave corner ghosts unfilled") {
  const GridDims gd{10, 9, 6, 1};
  const Decomposition dec = decompose(gd, {2, 2, 1}, 2);
  const Snapshot global = snapshot(Grid::allocate(gd, Storage::two_grid, FillPattern::linear()));
  const auto out = exchange_once(dec, global, {1, 0, 2});
  const RankInfo& r0 = dec.ranks[0];
  CHECK(std::isnan(out[0].at(r0.dims.nx, r0.dims.ny, 0)));
  CHECK(out[0].at(r0.dims.nx, 0, 0) == double(r0.dims.nx));
  CHECK_THROWS_AS(HaloPlan::directional(1).reordered({0, 0, 2}), std::invalid_argument);
}

TEST_CASE("message count per round equals the neighbour count") {
  const auto res = run_distributed(cube(12), FillPattern::random(2), {3, 2, 1}, cfg_for(1, 1, 2), 2);
  for (const RankReport& r : res.ranks) {
    CHECK(r.messages_per_round.size() == 2);
    for (auto m : r.messages_per_round) CHECK(m == std::uint64_t(r.neighbors));
  }
  CHECK(res.ranks[0].neighbors == 2);
  CHECK(res.ranks[1].neighbors == 3);
}

TEST_CASE("shrinking level geometry") {
  const RankInfo info = test::fake_rank({6, 5, 4, 3}, {}, {false, true, true, true, false, false});
  const auto lv = shrinking_levels(info, 3);
  REQUIRE(lv.size() == 3);
  CHECK(lv[0].domain == Box{{0, -2, 0}, {8, 7, 4}});
  CHECK(lv[1].domain == Box{{0, -1, 0}, {7, 6, 4}});
  CHECK(lv[2].domain == Box{{0, 0, 0}, {6, 5, 4}});
  for (const auto& l : lv) CHECK(l.extent == Box{{-1, -2, -1}, {8, 7, 5}});
  CHECK_THROWS_AS(shrinking_levels(info, 4), std::invalid_argument);
}

TEST_CASE("h=1 outer step is a plain interior update") {
  const RankInfo info = test::fake_rank({5, 5, 5, 1}, {}, {});
  const auto lv = shrinking_levels(info, 1);
  CHECK(lv[0].domain == info.dims.interior());
  Grid g = Grid::allocate(info.dims, Storage::two_grid, FillPattern::random(6));
  PipelineConfig c = cfg_for(1, 1, 1);
  c.block = {5, 5, 5};
  outer_step(g, info, c, 1);
  CHECK(compare(snapshot(g), oracle(info.dims, FillPattern::random(6), 1), 0.0, true).bitwise);
  CHECK_THROWS_AS(outer_step(g, info, cfg_for(1, 1, 2), 3), std::invalid_argument);
}

TEST_CASE("h=2 on 1x1x2 ranks, 8^3 random(5)") {
  for (Storage st : {Storage::two_grid, Storage::compressed}) {
    const auto res = run_distributed(cube(8), FillPattern::random(5), {1, 1, 2}, cfg_for(1, 2, 1, st), 1);
    CHECK(compare(res.gathered, oracle(cube(8), FillPattern::random(5), 2), 1e-13).bitwise);
  }
}

TEST_CASE("h=16 on 2x1x1 ranks, 64^3 hotplate, 2 outer steps") {
  const auto res = run_distributed(cube(64), FillPattern::hotplate(), {2, 1, 1}, cfg_for(2, 4, 2), 2);
  const Comparison c = compare(res.gathered, oracle(cube(64), FillPattern::hotplate(), 32), 1e-13);
  CHECK(c.pass);
  CHECK(c.bitwise);
}

TEST_CASE("8 ranks, 48^3, h=4, 3 outer steps") {
  const auto res = run_distributed(cube(48), FillPattern::random(9), {2, 2, 2}, cfg_for(1, 2, 2), 3);
  CHECK(compare(res.gathered, oracle(cube(48), FillPattern::random(9), 12), 1e-13).pass);
  for (const RankReport& r : res.ranks) CHECK(r.stats.messages_sent == 3 * 3);
}

TEST_CASE("one rank equals the shared-memory pipeline") {
  for (Storage st : {Storage::two_grid, Storage::compressed}) {
    PipelineConfig c = cfg_for(1, 2, 2, st);
    c.block = default_block({12, 10, 9, 1});
    const auto res = run_distributed({12, 10, 9, 1}, FillPattern::random(8), {1, 1, 1}, c, 2);
    Grid g = allocate_for({12, 10, 9, 1}, c, FillPattern::random(8));
    run_node_sweeps(g, c, 2);
    CHECK(compare(res.gathered, snapshot(g), 0.0).bitwise);
  }
}

TEST_CASE("batched outer steps and compressed ranks") {
  DistributedOptions opts;
  opts.batch = 2;
  const auto res =
      run_distributed(cube(20), FillPattern::random(4), {2, 2, 1}, cfg_for(1, 2, 1, Storage::compressed), 2, opts);
  CHECK(compare(res.gathered, oracle(cube(20), FillPattern::random(4), 8), 1e-13).bitwise);
}

TEST_CASE("weak scaling keeps the per-rank block fixed") {
  for (int p : {1, 2, 3}) {
    const Decomposition d = decompose({16 * p, 16 * p, 16, 1}, {p, p, 1}, 4);
    CHECK(d.global.nx == 16 * p);
    for (const RankInfo& r : d.ranks) CHECK(r.dims == GridDims{16, 16, 16, 4});
  }
}
