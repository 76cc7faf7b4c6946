#include "ptb/bench.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <set>
#include <stdexcept>

#include "ptb/kernel.hpp"

namespace ptb {

std::vector<Variant> all_variants(const PipelineConfig& base) {
  std::vector<Variant> out{{"naive", base}, {"blocked", base}};
  for (Storage st : {Storage::two_grid, Storage::compressed})
    for (SyncMode sync : {SyncMode::barrier, SyncMode::relaxed}) {
      PipelineConfig c = base;
      c.storage = st;
      c.sync = sync;
      out.push_back({"pipeline", c});
    }
  return out;
}

namespace {

bool is_pipeline(const Variant& v) { return v.name == "pipeline"; }

}  // namespace

BenchResult run_bench(const Variant& v, const BenchOptions& opts) {
  if (opts.sweeps < 1 || opts.reps < 1) throw std::invalid_argument("sweeps and reps must be >= 1");
  const bool pipe = is_pipeline(v);
  if (!pipe && v.name != "naive" && v.name != "blocked")
    throw std::invalid_argument("unknown variant: " + v.name);
  const GridDims& dims = opts.dims;
  dims.validate();

  const BlockSize spatial = opts.spatial_block.bx > 0 ? opts.spatial_block : default_block(dims);
  if (!pipe) validate_block(spatial, dims);
  const int unit = pipe ? v.cfg.updates_per_sweep() : 1;

  Grid g = pipe ? allocate_for(dims, v.cfg, opts.pattern)
                : Grid::allocate(dims, Storage::two_grid, opts.pattern);
  std::optional<BlockSchedule> fwd, rev;
  if (pipe) {
    fwd.emplace(build_schedule(dims, v.cfg, Traversal::forward));
    if (v.cfg.storage == Storage::compressed) rev.emplace(build_schedule(dims, v.cfg, Traversal::reverse));
  }
  int node_sweeps = 0;
  auto one_sweep = [&] {
    if (v.name == "naive") {
      sweep_naive(g);
    } else if (v.name == "blocked") {
      sweep_spatial_blocked(g, spatial);
    } else {
      const Traversal dir = g.next_traversal(unit);
      run_sweep(g, dir == Traversal::forward ? *fwd : *rev, v.cfg, node_sweeps++);
    }
  };

  one_sweep();
  std::vector<double> times;
  for (int r = 0; r < opts.reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int s = 0; s < opts.sweeps; ++s) one_sweep();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());

  BenchResult res;
  res.variant = v.name;
  res.nx = dims.nx;
  res.ny = dims.ny;
  res.nz = dims.nz;
  res.sweeps = opts.sweeps * unit;
  res.seconds = times.size() % 2 ? times[times.size() / 2]
                                 : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
  if (pipe) {
    res.n = v.cfg.teams;
    res.t = v.cfg.team_size;
    res.T = v.cfg.updates_per_thread;
    res.dl = v.cfg.dl;
    res.du = v.cfg.du;
    res.dt = v.cfg.dt;
    res.sync = to_string(v.cfg.sync);
    res.storage = to_string(v.cfg.storage);
  } else {
    res.dl = res.du = 0;
  }
  if (opts.verify) {
    const int levels = unit * (1 + opts.reps * opts.sweeps);
    const Comparison c = compare(snapshot(g), oracle(dims, opts.pattern, levels), opts.tol);
    res.verified = c.pass ? Verified::yes : Verified::no;
  }
  return res;
}

std::vector<PipelineConfig> equivalence_matrix(int size) {
  std::vector<PipelineConfig> out;
  const GridDims dims = cube(size);
  for (Storage st : {Storage::two_grid, Storage::compressed})
    for (SyncMode sync : {SyncMode::barrier, SyncMode::relaxed})
      for (int n : {1, 2})
        for (int t : {1, 2, 4})
          for (int T : {1, 2})
            for (int du : {1, 2, 4})
              for (int dt : {0, 8}) {
                PipelineConfig c;
                c.teams = n;
                c.team_size = t;
                c.updates_per_thread = T;
                c.dl = 1;
                c.du = du;
                c.dt = dt;
                c.sync = sync;
                c.storage = st;
                c.block = default_block(dims);
                try {
                  c.validate();
                  build_schedule(dims, c);
                } catch (const std::invalid_argument&) {
                  continue;
                }
                out.push_back(c);
              }
  return out;
}

std::vector<MatrixRow> verify_matrix(const GridDims& dims, const FillPattern& pattern,
                                     const std::vector<PipelineConfig>& configs, int sweeps, double tol,
                                     const std::function<void(const MatrixRow&)>& progress) {
  std::set<int> wanted;
  for (const auto& c : configs) wanted.insert(sweeps * c.updates_per_sweep());
  std::map<int, Snapshot> reference;
  {
    Grid g = Grid::allocate(dims, Storage::two_grid, pattern);
    int level = 0;
    for (int target : wanted) {
      while (level < target) {
        sweep_naive(g);
        ++level;
      }
      reference.emplace(target, snapshot(g));
    }
  }

  std::vector<MatrixRow> rows;
  for (const auto& c : configs) {
    Grid g = allocate_for(dims, c, pattern);
    run_node_sweeps(g, c, sweeps);
    MatrixRow row{c, sweeps * c.updates_per_sweep(), {}};
    row.cmp = compare(snapshot(g), reference.at(row.levels), tol);
    if (progress) progress(row);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ptb
