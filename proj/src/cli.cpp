#include "ptb/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "ptb/bench.hpp"
#include "ptb/decomp.hpp"
#include "ptb/kernel.hpp"
#include "ptb/model.hpp"
#include "ptb/pipeline.hpp"
#include "ptb/report.hpp"
#include "ptb/verify.hpp"

namespace ptb {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Flags shared by every subcommand that runs a pipeline.
struct RunFlags {
  int size = 64;
  int nx = 0, ny = 0, nz = 0;
  PipelineConfig cfg;
  std::string block;
  std::string sync = "relaxed";
  std::string storage = "twogrid";
  std::string pattern = "random(1)";
  int sweeps = 1;
  bool pin = false;
  int spin_timeout_ms = 120000;

  void add_to(CLI::App* app) {
    app->add_option("--size", size, "Cube edge (interior cells)")->check(CLI::PositiveNumber);
    app->add_option("--nx", nx, "Interior cells along x (overrides --size)")->check(CLI::PositiveNumber);
    app->add_option("--ny", ny, "Interior cells along y")->check(CLI::PositiveNumber);
    app->add_option("--nz", nz, "Interior cells along z")->check(CLI::PositiveNumber);
    app->add_option("--teams", cfg.teams, "Number of teams n")->check(CLI::PositiveNumber);
    app->add_option("--t,--team-size", cfg.team_size, "Threads per team t")->check(CLI::PositiveNumber);
    app->add_option("-T,--T", cfg.updates_per_thread, "Updates per thread and block T")
        ->check(CLI::PositiveNumber);
    app->add_option("--dl", cfg.dl, "Minimum block distance between neighbouring threads");
    app->add_option("--du", cfg.du, "Maximum block distance between neighbouring threads");
    app->add_option("--dt", cfg.dt, "Extra distance between teams");
    app->add_option("--block", block, "Block size BXxBYxBZ (default: up to 120x8x8)");
    app->add_option("--sync", sync, "barrier or relaxed")->check(CLI::IsMember({"barrier", "relaxed"}));
    app->add_option("--storage", storage, "twogrid or compressed")
        ->check(CLI::IsMember({"twogrid", "compressed"}));
    app->add_option("--pattern", pattern, "constant(v), linear, hotplate or random(seed)");
    app->add_option("--sweeps", sweeps, "Sweeps per run")->check(CLI::NonNegativeNumber);
    app->add_flag("--pin", pin, "Pin pipeline threads to cores");
    app->add_option("--spin-timeout-ms", spin_timeout_ms, "Relaxed-mode stall timeout")
        ->check(CLI::PositiveNumber);
  }

  GridDims dims() const { return {nx ? nx : size, ny ? ny : size, nz ? nz : size, 1}; }

  PipelineConfig config() const {
    PipelineConfig c = cfg;
    c.sync = parse_sync(sync);
    c.storage = parse_storage(storage);
    c.block = block.empty() ? default_block(dims()) : parse_block(block);
    c.pin_threads = pin;
    c.spin_timeout = std::chrono::milliseconds(spin_timeout_ms);
    c.validate();
    return c;
  }
};

int run_bench_cmd(const RunFlags& f, const std::string& variant, int reps, bool no_verify,
                  bool force_verify, const std::string& format, int threads, std::ostream& out,
                  std::ostream& err) {
  const PipelineConfig cfg = f.config();
  BenchOptions opts;
  opts.dims = f.dims();
  opts.dims.validate();
  opts.pattern = parse_pattern(f.pattern);
  opts.sweeps = std::max(f.sweeps, 1);
  opts.reps = reps;
  opts.verify = force_verify || (!no_verify && opts.dims.interior_cells() <= 128LL * 128 * 128);
  if (!f.block.empty()) opts.spatial_block = cfg.block;
  if (threads > 0) omp_set_num_threads(threads);

  std::vector<Variant> variants;
  if (variant == "all")
    variants = all_variants(cfg);
  else
    variants.push_back({variant, cfg});

  std::vector<BenchResult> results;
  for (const Variant& v : variants) results.push_back(run_bench(v, opts));

  if (format == "json")
    write_json(out, results);
  else
    write_csv(out, results);

  const bool bad = std::any_of(results.begin(), results.end(),
                               [](const BenchResult& r) { return r.verified == Verified::no; });
  if (bad) err << "verification failed for at least one variant\n";
  return bad ? 1 : 0;
}

int run_verify_cmd(const RunFlags& f, bool matrix, double tol, const std::string& dump, std::ostream& out,
                   std::ostream& err) {
  const GridDims dims = f.dims();
  dims.validate();
  const FillPattern pattern = parse_pattern(f.pattern);
  std::vector<PipelineConfig> configs;
  if (matrix) {
    if (dims.nx != dims.ny || dims.ny != dims.nz)
      throw std::invalid_argument("--matrix needs a cubic grid");
    configs = equivalence_matrix(dims.nx);
    for (auto& c : configs) c.spin_timeout = std::chrono::milliseconds(f.spin_timeout_ms);
  } else {
    configs.push_back(f.config());
    build_schedule(dims, configs.back());
  }
  out << "storage,sync,n,t,T,dl,du,dt,block,levels,max_rel,bitwise,pass\n";
  int failures = 0;
  verify_matrix(dims, pattern, configs, f.sweeps, tol, [&](const MatrixRow& r) {
    const PipelineConfig& c = r.cfg;
    out << to_string(c.storage) << ',' << to_string(c.sync) << ',' << c.teams << ',' << c.team_size << ','
        << c.updates_per_thread << ',' << c.dl << ',' << c.du << ',' << c.dt << ',' << to_string(c.block)
        << ',' << r.levels << ',' << g17(r.cmp.max_rel) << ',' << (r.cmp.bitwise ? "yes" : "no") << ','
        << (r.cmp.pass ? "yes" : "no") << '\n';
    if (!r.cmp.pass) {
      ++failures;
      err << "mismatch: " << r.cmp.describe() << '\n';
    }
  });
  if (!dump.empty()) {
    Grid g = allocate_for(dims, configs.front(), pattern);
    run_node_sweeps(g, configs.front(), f.sweeps);
    write_dump_file(dump, snapshot(g));
  }
  return failures ? 1 : 0;
}

int run_model_cmd(bool speedup, bool halo, bool baseline, const std::vector<int>& ts,
                  const std::vector<int>& Ts, const std::vector<int>& Ls, const std::vector<int>& hs,
                  const MachineParams& m, const NetworkParams& net, std::ostream& out) {
  if (!speedup && !halo && !baseline) speedup = halo = baseline = true;
  if (baseline) {
    out << "M_s,baseline_lups\n";
    out << g17(m.mem_saturated) << ',' << g17(baseline_perf(m.mem_saturated)) << '\n';
  }
  if (speedup) {
    out << "t,T,speedup\n";
    for (int t : ts)
      for (int T : Ts) out << t << ',' << T << ',' << g17(pipelined_speedup(m, t, T)) << '\n';
  }
  if (halo) {
    out << "L,h,bulk_s,face_s,comm_s,ratio,efficiency\n";
    for (int L : Ls)
      for (int h : hs) {
        const HaloTime ht = multihalo_time(L, h, net);
        out << L << ',' << h << ',' << g17(ht.bulk) << ',' << g17(ht.face) << ',' << g17(ht.comm) << ','
            << g17(multihalo_ratio(L, h, net)) << ',' << g17(efficiency(L, h, net)) << '\n';
      }
  }
  return 0;
}

std::array<int, 3> parse_phase_order(const std::string& s) {
  if (s.size() != 3) throw std::invalid_argument("phase order must be a permutation of xyz");
  std::array<int, 3> order{};
  for (std::size_t i = 0; i < 3; ++i) {
    const char c = s[i];
    if (c < 'x' || c > 'z') throw std::invalid_argument("phase order must be a permutation of xyz");
    order[i] = c - 'x';
  }
  return order;
}

int run_dist_cmd(const RunFlags& f, int ranks, const std::string& layout_str, int outer_steps, int batch,
                 const std::string& phase_order, double tol, const std::string& dump, std::ostream& out,
                 std::ostream& err) {
  const PipelineConfig cfg = f.config();
  const GridDims dims = f.dims();
  dims.validate();
  const FillPattern pattern = parse_pattern(f.pattern);
  const Layout layout = layout_str.empty() ? balanced_layout(ranks) : parse_layout(layout_str);
  if (!layout_str.empty() && ranks > 0 && layout.ranks() != ranks)
    throw std::invalid_argument("--ranks does not match --layout");
  DistributedOptions opts;
  opts.batch = batch;
  opts.phase_order = parse_phase_order(phase_order);

  const DistributedResult res = run_distributed(dims, pattern, layout, cfg, outer_steps, opts);
  const int levels = outer_steps * batch * cfg.updates_per_sweep();
  const Comparison c = compare(res.gathered, oracle(dims, pattern, levels), tol);

  out << "rank,cx,cy,cz,nx,ny,nz,neighbors,messages_sent,bytes_sent\n";
  for (const RankReport& r : res.ranks)
    out << r.rank << ',' << r.coord.x << ',' << r.coord.y << ',' << r.coord.z << ',' << r.dims.nx << ','
        << r.dims.ny << ',' << r.dims.nz << ',' << r.neighbors << ',' << r.stats.messages_sent << ','
        << r.stats.bytes_sent << '\n';
  out << "layout " << to_string(layout) << ", halo " << res.decomposition.halo << ", levels " << levels
      << ": " << c.describe() << '\n';
  if (!dump.empty()) write_dump_file(dump, res.gathered);
  if (!c.pass) err << "distributed result differs from the serial oracle\n";
  return c.pass ? 0 : 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pipelined temporal blocking for the 3D Jacobi stencil", "ptb"};
  app.require_subcommand(1);

  RunFlags bench_flags, verify_flags, dist_flags;

  auto* bench = app.add_subcommand("bench", "Time the sweep variants");
  bench_flags.add_to(bench);
  std::string variant = "all", format = "csv";
  int reps = 3, threads = 0;
  bool no_verify = false, force_verify = false;
  bench->add_option("--variant", variant, "naive, blocked, pipeline or all")
      ->check(CLI::IsMember({"naive", "blocked", "pipeline", "all"}));
  bench->add_option("--reps", reps, "Timed repetitions (median reported)")->check(CLI::PositiveNumber);
  bench->add_flag("--no-verify", no_verify, "Skip the oracle comparison");
  bench->add_flag("--verify", force_verify, "Verify even on large grids");
  bench->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  bench->add_option("--threads", threads, "OpenMP threads for the blocked sweep")->check(CLI::NonNegativeNumber);

  auto* verify = app.add_subcommand("verify", "Compare pipelined sweeps with the naive oracle");
  verify_flags.add_to(verify);
  bool matrix = false;
  double tol = 1e-13;
  std::string verify_dump;
  verify->add_flag("--matrix", matrix, "Run the full configuration matrix");
  verify->add_option("--tol", tol, "Relative tolerance");
  verify->add_option("--dump", verify_dump, "Write the pipelined field to PATH");

  auto* model = app.add_subcommand("model", "Evaluate the performance models");
  bool speedup = false, halo = false, baseline = false;
  std::vector<int> ts{1, 2, 4, 8}, Ts{1, 2, 4, 8}, Ls{8, 16, 32, 64, 128, 512}, hs{2, 4, 8, 16, 32};
  MachineParams mp;
  NetworkParams np;
  model->add_flag("--speedup", speedup, "Pipelined speedup table");
  model->add_flag("--halo", halo, "Multi-layer halo table");
  model->add_flag("--baseline", baseline, "Bandwidth-bound baseline");
  model->add_option("--t", ts, "Team sizes")->check(CLI::PositiveNumber);
  model->add_option("-T,--T", Ts, "Updates per thread")->check(CLI::PositiveNumber);
  model->add_option("--L,--edges", Ls, "Subdomain edges L")->check(CLI::PositiveNumber);
  model->add_option("--widths", hs, "Halo widths h")->check(CLI::PositiveNumber);
  model->add_option("--ms", mp.mem_saturated, "Saturated memory bandwidth, bytes/s");
  model->add_option("--ms1", mp.mem_single, "Single-thread memory bandwidth, bytes/s");
  model->add_option("--mc", mp.cache, "Shared cache bandwidth, bytes/s");
  model->add_option("--net-bandwidth", np.bandwidth, "Network bandwidth, bytes/s");
  model->add_option("--latency", np.latency, "Network latency, s");
  model->add_option("--node-rate", np.node_rate, "Node update rate, updates/s");

  auto* dist = app.add_subcommand("dist", "Multi-rank run on the loopback transport");
  dist_flags.add_to(dist);
  int ranks = 0, outer_steps = 1, batch = 1;
  std::string layout, phase_order = "xyz", dist_dump;
  dist->add_option("--ranks", ranks, "Rank count (balanced layout)")->check(CLI::PositiveNumber);
  dist->add_option("--layout", layout, "Rank layout PXxPYxPZ");
  dist->add_option("--outer-steps", outer_steps, "Exchange + compute rounds")->check(CLI::NonNegativeNumber);
  dist->add_option("--batch", batch, "Node sweeps per exchange")->check(CLI::PositiveNumber);
  dist->add_option("--phase-order", phase_order, "Exchange phase order (default xyz)");
  dist->add_option("--tol", tol, "Relative tolerance");
  dist->add_option("--dump", dist_dump, "Write the gathered field to PATH");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    if (*bench)
      return run_bench_cmd(bench_flags, variant, reps, no_verify, force_verify, format, threads, out,
                           err);
    if (*verify) return run_verify_cmd(verify_flags, matrix, tol, verify_dump, out, err);
    if (*model) {
      mp.validate();
      np.validate();
      return run_model_cmd(speedup, halo, baseline, ts, Ts, Ls, hs, mp, np, out);
    }
    if (*dist) {
      if (ranks == 0 && layout.empty()) ranks = 1;
      return run_dist_cmd(dist_flags, ranks, layout, outer_steps, batch, phase_order, tol, dist_dump, out, err);
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace ptb
