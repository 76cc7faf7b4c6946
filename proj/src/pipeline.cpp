#include "ptb/pipeline.hpp"

#include <omp.h>
#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace ptb {

std::string to_string(SyncMode s) { return s == SyncMode::barrier ? "barrier" : "relaxed"; }

SyncMode parse_sync(const std::string& s) {
  if (s == "barrier") return SyncMode::barrier;
  if (s == "relaxed") return SyncMode::relaxed;
  throw std::invalid_argument("unknown sync mode: " + s);
}

void PipelineConfig::validate() const {
  if (teams < 1 || team_size < 1 || updates_per_thread < 1)
    throw std::invalid_argument("teams, team size and updates per thread must be >= 1");
  if (dl < 1) throw std::invalid_argument("d_l must be >= 1");
  if (du < dl) throw std::invalid_argument("d_u must be >= d_l");
  if (dt < 0) throw std::invalid_argument("team delay must be >= 0");
  if (block.bx < 1 || block.by < 1 || block.bz < 1)
    throw std::invalid_argument("block extents must be >= 1");
}

BlockSize default_block(const GridDims& dims) {
  return {std::min(dims.nx, 120), std::min(dims.ny, 8), std::min(dims.nz, 8)};
}

ThreadCounters::ThreadCounters(int threads, std::int64_t blocks_per_sweep)
    : slots_(std::size_t(threads)), blocks_(blocks_per_sweep) {
  if (threads < 1) throw std::invalid_argument("ThreadCounters needs at least one thread");
}

void ThreadCounters::reset() {
  for (auto& s : slots_) s.value.store(0, std::memory_order_release);
}

int lower_distance(int thread, const PipelineConfig& cfg) {
  const bool team_front = thread % cfg.team_size == 0;
  return cfg.dl + (team_front && thread > 0 ? cfg.dt : 0);
}

int upper_distance(int thread, const PipelineConfig& cfg) {
  const bool team_rear = thread % cfg.team_size == cfg.team_size - 1;
  return cfg.du + (team_rear && thread < cfg.threads() - 1 ? cfg.dt : 0);
}

namespace {

bool gate(std::int64_t prev, std::int64_t self, std::int64_t next, int thread, int threads,
          const PipelineConfig& cfg, std::int64_t blocks) {
  if (thread > 0 && prev < blocks && prev - self < lower_distance(thread, cfg)) return false;
  if (thread < threads - 1 && self - next > upper_distance(thread, cfg)) return false;
  return true;
}

}  // namespace

bool may_proceed(std::span<const std::int64_t> c, int thread, const PipelineConfig& cfg,
                 std::int64_t blocks_per_sweep) {
  const int p = int(c.size());
  if (thread < 0 || thread >= p) throw std::out_of_range("thread index outside counter set");
  const std::int64_t prev = thread > 0 ? c[std::size_t(thread - 1)] : 0;
  const std::int64_t next = thread < p - 1 ? c[std::size_t(thread + 1)] : 0;
  return gate(prev, c[std::size_t(thread)], next, thread, p, cfg, blocks_per_sweep);
}

bool may_proceed(const ThreadCounters& c, int thread, const PipelineConfig& cfg) {
  const int p = c.size();
  if (thread < 0 || thread >= p) throw std::out_of_range("thread index outside counter set");
  const std::int64_t prev = thread > 0 ? c.load(thread - 1) : 0;
  const std::int64_t next = thread < p - 1 ? c.load(thread + 1) : 0;
  return gate(prev, c.load(thread), next, thread, p, cfg, c.blocks_per_sweep());
}

std::vector<TraceViolation> audit_trace(const PipelineTrace& trace, const PipelineConfig& cfg) {
  std::vector<TraceViolation> out;
  const int p = cfg.threads();
  // (sweep, thread) -> next expected block
  std::vector<std::pair<int, std::int64_t>> expected(std::size_t(p), {-1, 0});
  for (const TraceEvent& e : trace.events) {
    auto fail = [&](std::string why) { out.push_back({e, std::move(why)}); };
    if (e.thread < 0 || e.thread >= p) {
      fail("thread index out of range");
      continue;
    }
    auto& [sweep, next_block] = expected[std::size_t(e.thread)];
    if (sweep != e.sweep) {
      sweep = e.sweep;
      next_block = 0;
    }
    if (e.block != next_block) fail("blocks not started in order");
    next_block = e.block + 1;
    if (e.c_self != e.block) fail("own counter differs from completed block count");
    if (e.thread > 0) {
      if (e.c_prev < 0) fail("missing predecessor counter");
      else if (e.c_prev < trace.blocks_per_sweep && e.c_prev - e.c_self < lower_distance(e.thread, cfg))
        fail("predecessor closer than the lower distance");
    }
    if (e.thread < p - 1) {
      if (e.c_next < 0) fail("missing successor counter");
      else if (e.c_self - e.c_next > upper_distance(e.thread, cfg))
        fail("successor further behind than the upper distance");
    }
  }
  return out;
}

void write_trace_csv(std::ostream& os, const PipelineTrace& trace) {
  os << "sweep,thread,block,c_prev,c_self,c_next\n";
  for (const TraceEvent& e : trace.events)
    os << e.sweep << ',' << e.thread << ',' << e.block << ',' << e.c_prev << ',' << e.c_self << ','
       << e.c_next << '\n';
}

namespace {

void pin_current_thread(int index) {
  cpu_set_t allowed;
  CPU_ZERO(&allowed);
  if (sched_getaffinity(0, sizeof allowed, &allowed) != 0) return;
  std::vector<int> cpus;
  for (int c = 0; c < CPU_SETSIZE; ++c)
    if (CPU_ISSET(c, &allowed)) cpus.push_back(c);
  if (cpus.empty()) return;
  cpu_set_t one;
  CPU_ZERO(&one);
  CPU_SET(cpus[std::size_t(index) % cpus.size()], &one);
  pthread_setaffinity_np(pthread_self(), sizeof one, &one);
}

inline void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_ia32_pause();
#endif
}

struct SweepRun {
  Grid& grid;
  const BlockSchedule& schedule;
  const PipelineConfig& cfg;
  Traversal dir;
  int sweep;
  int threads;
  std::int64_t blocks;
  ThreadCounters counters;
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::vector<TraceEvent>>* events;

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(error_mutex);
      if (!error) error = e;
    }
    abort.store(true, std::memory_order_release);
  }

  void process(int thread, std::int64_t step) {
    const int t = cfg.updates_per_thread;
    for (int level = thread * t + 1; level <= (thread + 1) * t; ++level)
      update_block(grid, schedule.region(step, level),
                   LevelMode{level, dir, schedule.level(level).domain});
  }

  void record(int thread, std::int64_t step, std::int64_t prev, std::int64_t next) {
    if (!events) return;
    (*events)[std::size_t(thread)].push_back(
        {sweep, thread, step, thread > 0 ? prev : -1, step, thread < threads - 1 ? next : -1});
  }

  void run_barrier(int thread, std::span<const std::int64_t> offsets) {
    const std::int64_t steps = blocks + offsets.back();
    for (std::int64_t step = 0; step < steps; ++step) {
      const std::int64_t b = step - offsets[std::size_t(thread)];
      if (b >= 0 && b < blocks && !abort.load(std::memory_order_acquire)) {
        try {
          record(thread, b, thread > 0 ? counters.load(thread - 1) : 0,
                 thread < threads - 1 ? counters.load(thread + 1) : 0);
          process(thread, b);
          counters.store(thread, b + 1);
        } catch (...) {
          fail(std::current_exception());
        }
      }
#pragma omp barrier
    }
  }

  // Spins until the gate opens; false if the sweep was aborted.
  bool wait_turn(int thread, std::int64_t self) {
    constexpr int kSpinBudget = 64;
    std::int64_t spins = 0;
    auto last_progress = std::chrono::steady_clock::now();
    std::int64_t seen_prev = -1, seen_next = -1;
    for (;;) {
      if (abort.load(std::memory_order_acquire)) return false;
      const std::int64_t prev = thread > 0 ? counters.load(thread - 1) : 0;
      const std::int64_t next = thread < threads - 1 ? counters.load(thread + 1) : 0;
      if (gate(prev, self, next, thread, threads, cfg, blocks)) {
        record(thread, self, prev, next);
        return true;
      }
      if (++spins < kSpinBudget) {
        cpu_relax();
        continue;
      }
      std::this_thread::yield();
      if ((spins & 63) != 0) continue;
      const auto now = std::chrono::steady_clock::now();
      if (prev != seen_prev || next != seen_next) {
        seen_prev = prev;
        seen_next = next;
        last_progress = now;
      } else if (now - last_progress > cfg.spin_timeout) {
        std::ostringstream msg;
        msg << "pipeline stalled: thread " << thread << " waiting at block " << self
            << " (c_prev=" << prev << ", c_next=" << next << ")";
        fail(std::make_exception_ptr(PipelineStalled(msg.str())));
        return false;
      }
    }
  }

  void run_relaxed(int thread) {
    for (std::int64_t b = 0; b < blocks; ++b) {
      if (!wait_turn(thread, b)) return;
      try {
        process(thread, b);
      } catch (...) {
        fail(std::current_exception());
        return;
      }
      counters.store(thread, b + 1);
    }
  }
};

}  // namespace

void run_sweep(Grid& grid, const BlockSchedule& schedule, const PipelineConfig& cfg, int sweep_index,
               PipelineTrace* trace) {
  cfg.validate();
  const int levels = cfg.updates_per_sweep();
  if (schedule.levels() != levels)
    throw std::invalid_argument("schedule level count differs from n*t*T");
  if (grid.storage() != cfg.storage)
    throw std::invalid_argument("grid storage differs from the pipeline configuration");
  const Traversal dir = grid.next_traversal(levels);
  if (grid.storage() == Storage::compressed && dir != schedule.direction())
    throw std::invalid_argument("schedule traversal does not match the compressed grid state");

  const int p = cfg.threads();
  std::vector<std::vector<TraceEvent>> events(trace ? std::size_t(p) : 0);
  SweepRun run{grid, schedule, cfg, dir, sweep_index, p, schedule.blocks(),
               ThreadCounters(p, schedule.blocks()), {}, {}, {}, trace ? &events : nullptr};

  std::vector<std::int64_t> offsets(std::size_t(p), 0);
  for (int i = 1; i < p; ++i) offsets[std::size_t(i)] = offsets[std::size_t(i - 1)] + lower_distance(i, cfg);

#pragma omp parallel num_threads(p)
  {
    const int thread = omp_get_thread_num();
    if (omp_get_num_threads() != p) {
      if (thread == 0)
        run.fail(std::make_exception_ptr(std::runtime_error(
            "OpenMP delivered " + std::to_string(omp_get_num_threads()) + " threads, pipeline needs " +
            std::to_string(p))));
    } else {
      if (cfg.pin_threads) pin_current_thread(thread);
      if (cfg.sync == SyncMode::barrier)
        run.run_barrier(thread, offsets);
      else
        run.run_relaxed(thread);
    }
  }

  if (run.error) std::rethrow_exception(run.error);
  grid.advance(levels, dir);

  if (trace) {
    trace->blocks_per_sweep = schedule.blocks();
    for (auto& per_thread : events)
      trace->events.insert(trace->events.end(), per_thread.begin(), per_thread.end());
  }
}

namespace {

void run_sweeps(Grid& grid, const PipelineConfig& cfg, int sweeps, PipelineTrace* trace) {
  if (sweeps < 0) throw std::invalid_argument("sweep count must be non-negative");
  const BlockSchedule forward = build_schedule(grid.dims(), cfg, Traversal::forward);
  std::optional<BlockSchedule> reverse;
  for (int s = 0; s < sweeps; ++s) {
    const Traversal dir = grid.next_traversal(cfg.updates_per_sweep());
    if (dir == Traversal::reverse && !reverse)
      reverse.emplace(build_schedule(grid.dims(), cfg, Traversal::reverse));
    run_sweep(grid, dir == Traversal::forward ? forward : *reverse, cfg, s, trace);
  }
}

}  // namespace

void run_node_sweeps(Grid& grid, const PipelineConfig& cfg, int sweeps) {
  run_sweeps(grid, cfg, sweeps, nullptr);
}

PipelineTrace instrumented_run(Grid& grid, const PipelineConfig& cfg, int sweeps) {
  PipelineTrace trace;
  run_sweeps(grid, cfg, sweeps, &trace);
  trace.violations = audit_trace(trace, cfg);
  return trace;
}

Grid allocate_for(const GridDims& dims, const PipelineConfig& cfg, const FillPattern& pattern) {
  return Grid::allocate(dims, cfg.storage, pattern,
                        cfg.storage == Storage::compressed ? cfg.updates_per_sweep() : 0);
}

}  // namespace ptb
