#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "ptb/decomp.hpp"
#include "ptb/pipeline.hpp"
#include "ptb/verify.hpp"
#include "support.hpp"

using namespace ptb;

namespace {

PipelineConfig make(int n, int t, int T, int dl, int du, int dt, SyncMode sync = SyncMode::relaxed,
                    Storage st = Storage::two_grid) {
  PipelineConfig c;
  c.teams = n;
  c.team_size = t;
  c.updates_per_thread = T;
  c.dl = dl;
  c.du = du;
  c.dt = dt;
  c.sync = sync;
  c.storage = st;
  return c;
}

bool matches_oracle(const Grid& g, const FillPattern& p, int levels) {
  return compare(snapshot(g), oracle(g.dims(), p, levels), 0.0, true).bitwise;
}

}  // namespace

TEST_CASE("may_proceed examples") {
  const PipelineConfig two = make(1, 2, 1, 1, 4, 0);
  CHECK(may_proceed(std::vector<std::int64_t>{3, 2}, 1, two));
  CHECK_FALSE(may_proceed(std::vector<std::int64_t>{7, 2}, 0, two));
  CHECK(may_proceed(std::vector<std::int64_t>{6, 2}, 0, two));

  const PipelineConfig teams = make(2, 1, 1, 1, 4, 8);
  CHECK(may_proceed(std::vector<std::int64_t>{10, 1}, 1, teams));
  CHECK_FALSE(may_proceed(std::vector<std::int64_t>{9, 1}, 1, teams));
}

TEST_CASE("front and rear threads skip their missing neighbour") {
  const PipelineConfig c = make(1, 3, 1, 1, 2, 0);
  CHECK(may_proceed(std::vector<std::int64_t>{0, 0, 0}, 0, c));
  CHECK_FALSE(may_proceed(std::vector<std::int64_t>{0, 0, 0}, 1, c));
  CHECK(may_proceed(std::vector<std::int64_t>{5, 4, 0}, 2, c));
  CHECK_FALSE(may_proceed(std::vector<std::int64_t>{5, 4, 1}, 1, c));
  CHECK(may_proceed(std::vector<std::int64_t>{0}, 0, make(1, 1, 1, 1, 1, 0)));
  CHECK_THROWS_AS(may_proceed(std::vector<std::int64_t>{0, 0}, 2, c), std::out_of_range);
}

TEST_CASE("a finished predecessor no longer holds its successor back") {
  const PipelineConfig c = make(1, 2, 1, 3, 4, 0);
  CHECK_FALSE(may_proceed(std::vector<std::int64_t>{9, 8}, 1, c, 10));
  CHECK(may_proceed(std::vector<std::int64_t>{10, 8}, 1, c, 10));
  CHECK(may_proceed(std::vector<std::int64_t>{10, 9}, 1, c, 10));
}

TEST_CASE("team delay applies at team boundaries only") {
  const PipelineConfig c = make(3, 2, 1, 1, 4, 8);
  CHECK(lower_distance(0, c) == 1);
  CHECK(lower_distance(1, c) == 1);
  CHECK(lower_distance(2, c) == 9);
  CHECK(lower_distance(4, c) == 9);
  CHECK(upper_distance(1, c) == 12);
  CHECK(upper_distance(3, c) == 12);
  CHECK(upper_distance(5, c) == 4);
  CHECK(upper_distance(2, c) == 4);
}

TEST_CASE("may_proceed on live counters") {
  ThreadCounters c(2, 10);
  const PipelineConfig cfg = make(1, 2, 1, 1, 4, 0);
  CHECK(c.size() == 2);
  CHECK_FALSE(may_proceed(c, 1, cfg));
  c.store(0, 1);
  CHECK(may_proceed(c, 1, cfg));
  c.store(0, 5);
  CHECK_FALSE(may_proceed(c, 0, cfg));
  c.reset();
  CHECK(c.load(0) == 0);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(make(0, 1, 1, 1, 1, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make(1, 1, 1, 0, 1, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make(1, 1, 1, 2, 1, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make(1, 1, 1, 1, 1, -1).validate(), std::invalid_argument);
  CHECK(make(2, 4, 2, 1, 4, 0).updates_per_sweep() == 16);
  CHECK(default_block(cube(48)) == BlockSize{48, 8, 8});
  CHECK(default_block({200, 5, 9, 1}) == BlockSize{120, 5, 8});
  CHECK(parse_sync("barrier") == SyncMode::barrier);
  CHECK_THROWS_AS(parse_sync("lockstep"), std::invalid_argument);
}

TEST_CASE("single thread with one block equals naive sweeps") {
  PipelineConfig c = make(1, 1, 1, 1, 1, 0);
  const GridDims d{9, 7, 8, 1};
  c.block = {9, 7, 8};
  Grid g = allocate_for(d, c, FillPattern::random(4));
  run_node_sweeps(g, c, 5);
  CHECK(matches_oracle(g, FillPattern::random(4), 5));
}

TEST_CASE("2 teams of 4 threads, T=2 on 48^3 random(11)") {
  const GridDims d = cube(48);
  const Snapshot want = oracle(d, FillPattern::random(11), 16);
  Snapshot got[2];
  int i = 0;
  for (SyncMode sync : {SyncMode::relaxed, SyncMode::barrier}) {
    PipelineConfig c = make(2, 4, 2, 1, 4, 0, sync);
    c.block = default_block(d);
    Grid g = allocate_for(d, c, FillPattern::random(11));
    run_node_sweeps(g, c, 1);
    got[i] = snapshot(g);
    CHECK(compare(got[i], want, 1e-13).pass);
    ++i;
  }
  CHECK(compare(got[0], got[1], 0.0, true).bitwise);
}

TEST_CASE("pipelined sweeps of random configs equal naive sweeps") {
  test::Rng r(31);
  for (int trial = 0; trial < 30; ++trial) {
    const GridDims d = test::random_dims(r, 4, 12);
    PipelineConfig c = test::random_config(r, std::min({d.nx, d.ny, d.nz}));
    c.block = test::random_block(r, d);
    const int sweeps = r.uniform(1, 3);
    const FillPattern p = FillPattern::random(std::uint64_t(trial));
    Grid g = allocate_for(d, c, p);
    const Snapshot init = snapshot(g);
    run_node_sweeps(g, c, sweeps);
    CAPTURE(trial);
    CHECK(matches_oracle(g, p, sweeps * c.updates_per_sweep()));
    CHECK(test::ghosts_unchanged(snapshot(g), init));
  }
}

TEST_CASE("randomly interleaved shared-memory pipelines equal naive sweeps") {
  test::Rng r(32);
  for (int trial = 0; trial < 60; ++trial) {
    const GridDims d = test::random_dims(r, 3, 9);
    PipelineConfig c = test::random_config(r, std::min({d.nx, d.ny, d.nz}));
    c.block = test::random_block(r, d);
    const FillPattern p = FillPattern::random(std::uint64_t(500 + trial));
    Grid g = allocate_for(d, c, p);
    const int u = c.updates_per_sweep();
    const int sweeps = r.uniform(1, 3);
    for (int s = 0; s < sweeps; ++s) {
      const BlockSchedule sched = build_schedule(d, c, g.next_traversal(u));
      test::simulate_sweep(g, sched, c, r);
    }
    CAPTURE(trial);
    CHECK(matches_oracle(g, p, sweeps * u));
  }
}

TEST_CASE("randomly interleaved shrinking updates inside a larger field") {
  test::Rng r(33);
  for (int trial = 0; trial < 60; ++trial) {
    PipelineConfig c = test::random_config(r, 6);
    const int u = c.updates_per_sweep();
    const int batch = r.uniform(1, 2);
    const int h = u * batch;

    std::array<bool, 6> has{};
    for (auto& b : has) b = r.coin();
    GridDims local{0, 0, 0, h};
    Index3 offset;
    GridDims global{0, 0, 0, 1};
    for (int a = 0; a < 3; ++a) {
      const int n = r.uniform(h, h + 5);
      const int below = has[std::size_t(2 * a)] ? r.uniform(h, h + 3) : 0;
      const int above = has[std::size_t(2 * a + 1)] ? r.uniform(h, h + 3) : 0;
      (a == 0 ? local.nx : a == 1 ? local.ny : local.nz) = n;
      (a == 0 ? global.nx : a == 1 ? global.ny : global.nz) = below + n + above;
      offset[a] = below;
    }
    const RankInfo info = test::fake_rank(local, offset, has);
    const FillPattern p = FillPattern::random(std::uint64_t(900 + trial));
    const Snapshot g0 = snapshot(Grid::allocate(global, Storage::two_grid, p));

    Grid g = make_local_grid(g0, info, c.storage, c.storage == Storage::compressed ? u : 0);
    const Box lb = local.logical_box();
    for (int k = lb.lo.z; k < lb.hi.z; ++k)
      for (int j = lb.lo.y; j < lb.hi.y; ++j)
        for (int i = lb.lo.x; i < lb.hi.x; ++i)
          if (global.interior().contains(i + offset.x, j + offset.y, k + offset.z))
            g.initialize_cell(i, j, k, g0.at(i + offset.x, j + offset.y, k + offset.z));

    const auto levels = shrinking_levels(info, h);
    for (int q = 0; q < batch; ++q) {
      std::vector<LevelGeometry> sweep(levels.begin() + q * u, levels.begin() + (q + 1) * u);
      const Box base = sweep.front().domain;
      const BlockSize bs{r.uniform(1, base.hi.x - base.lo.x), r.uniform(1, base.hi.y - base.lo.y),
                         r.uniform(1, base.hi.z - base.lo.z)};
      const BlockSchedule sched(std::move(sweep), base, bs, g.next_traversal(u));
      test::simulate_sweep(g, sched, c, r);
    }

    const Snapshot want = oracle(global, p, h);
    bool ok = true;
    for (int k = 0; k < local.nz; ++k)
      for (int j = 0; j < local.ny; ++j)
        for (int i = 0; i < local.nx; ++i)
          ok = ok && test::bitwise_equal(g.value_at(i, j, k), want.at(i + offset.x, j + offset.y, k + offset.z));
    CAPTURE(trial);
    CHECK(ok);
  }
}

TEST_CASE("barrier traces keep every neighbour at least one block ahead") {
  PipelineConfig c = make(2, 2, 1, 1, 3, 2, SyncMode::barrier);
  c.block = {16, 4, 4};
  Grid g = allocate_for(cube(16), c, FillPattern::random(1));
  const PipelineTrace tr = instrumented_run(g, c, 2);
  CHECK(tr.violations.empty());
  CHECK(std::int64_t(tr.events.size()) == 2 * 4 * tr.blocks_per_sweep);
  for (const TraceEvent& e : tr.events)
    if (e.thread > 0) CHECK(e.c_prev - e.c_self >= 1);
}

TEST_CASE("relaxed lockstep stays inside the narrowest band") {
  for (Storage st : {Storage::two_grid, Storage::compressed}) {
    PipelineConfig c = make(1, 3, 1, 1, 1, 0, SyncMode::relaxed, st);
    c.block = {12, 3, 3};
    Grid g = allocate_for(cube(12), c, FillPattern::random(2));
    const PipelineTrace tr = instrumented_run(g, c, 2);
    CHECK(tr.violations.empty());
    for (const TraceEvent& e : tr.events) {
      if (e.thread > 0 && e.c_prev < tr.blocks_per_sweep) {
        CHECK(e.c_prev - e.c_self >= 1);
        CHECK(e.c_prev - e.c_self <= 2);
      }
      if (e.thread < 2) {
        CHECK(e.c_self - e.c_next >= 0);
        CHECK(e.c_self - e.c_next <= 1);
      }
    }
    CHECK(matches_oracle(g, FillPattern::random(2), 6));
  }
}

TEST_CASE("audit flags synthetic violations") {
  const PipelineConfig c = make(1, 2, 1, 1, 2, 0);
  PipelineTrace tr;
  tr.blocks_per_sweep = 10;
  tr.events = {{0, 0, 0, -1, 0, 0}, {0, 1, 0, 0, 0, -1}, {0, 0, 1, -1, 1, 0}, {0, 0, 2, -1, 2, 0},
               {0, 0, 3, -1, 3, 0}, {0, 1, 2, 4, 2, -1}};
  const auto v = audit_trace(tr, c);
  REQUIRE(v.size() == 3);
  CHECK(v[0].event.thread == 1);
  CHECK(v[0].reason.find("lower") != std::string::npos);
  CHECK(v[1].reason.find("upper") != std::string::npos);
  CHECK(v[2].reason.find("order") != std::string::npos);

  std::ostringstream os;
  write_trace_csv(os, tr);
  CHECK(os.str().rfind("sweep,thread,block,c_prev,c_self,c_next\n0,0,0,-1,0,0\n", 0) == 0);
}

TEST_CASE("worker failures surface without hanging the sweep") {
  for (SyncMode sync : {SyncMode::relaxed, SyncMode::barrier}) {
    PipelineConfig c = make(1, 2, 1, 1, 2, 0, sync);
    c.block = {4, 4, 4};
    const BlockSchedule big = build_schedule(cube(8), c);
    Grid g = allocate_for(cube(6), c, FillPattern::linear());
    CHECK_THROWS_AS(run_sweep(g, big, c), std::out_of_range);
  }
}

TEST_CASE("run_sweep checks its inputs") {
  PipelineConfig c = make(1, 2, 1, 1, 2, 0);
  c.block = {4, 4, 4};
  const BlockSchedule s = build_schedule(cube(8), c);
  Grid compressed = Grid::allocate(cube(8), Storage::compressed, FillPattern::linear(), 2);
  CHECK_THROWS_AS(run_sweep(compressed, s, c), std::invalid_argument);
  PipelineConfig three = c;
  three.team_size = 3;
  Grid g = allocate_for(cube(8), three, FillPattern::linear());
  CHECK_THROWS_AS(run_sweep(g, s, three), std::invalid_argument);

  PipelineConfig cc = c;
  cc.storage = Storage::compressed;
  Grid h = allocate_for(cube(8), cc, FillPattern::linear());
  const BlockSchedule rev = build_schedule(cube(8), cc, Traversal::reverse);
  CHECK_THROWS_AS(run_sweep(h, rev, cc), std::invalid_argument);
  CHECK(h.slack() == 2);
}
