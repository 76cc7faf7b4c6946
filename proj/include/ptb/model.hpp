#pragma once

namespace ptb {

/// Memory and cache bandwidths in bytes/s. The defaults use the ratios
/// M_s/M_s1 = 2 and M_c/M_s1 = 8 with M_s1 = 10 GB/s.
struct MachineParams {
  double mem_saturated = 20e9;
  double mem_single = 10e9;
  double cache = 80e9;

  void validate() const;
};

/// Saturated bandwidth of one socket of the reference machine, bytes/s.
inline constexpr double kSocketBandwidth = 18.5e9;

struct NetworkParams {
  double bandwidth = 3.2e9;  // bytes/s, one direction
  double latency = 1.8e-6;   // s
  double node_rate = 2.0e9;  // updates/s

  void validate() const;
};

/// Bandwidth-bound update rate: 16 bytes of memory traffic per update.
double baseline_perf(double mem_saturated);

/// Time per cell for the t*T updates one team applies to a block: one pass
/// through memory plus t*T-1 passes through the shared cache.
double team_block_time(const MachineParams& m, int t, int T);

/// Speedup of a pipelined team over the bandwidth-bound baseline.
double pipelined_speedup(const MachineParams& m, int t, int T);

struct HaloTime {
  double bulk = 0;  // h*L^3 updates
  double face = 0;  // extra updates in the overlap region
  double comm = 0;

  double compute() const { return bulk + face; }
  double total() const { return bulk + face + comm; }
};

/// Cost of one outer step on an L^3 subdomain with halo width h: h shrinking
/// updates (level s covers (L+h-s)^3 cells) followed by a three-phase exchange
/// whose slabs grow by the h-1 overlap in already exchanged directions. Each
/// phase sends two messages, one after the other.
HaloTime multihalo_time(int L, int h, const NetworkParams& net);

/// Time per update at h=1 over time per update at h (> 1 favours wide halos).
double multihalo_ratio(int L, int h, const NetworkParams& net);

/// compute / (compute + comm).
double efficiency(int L, int h, const NetworkParams& net);

}  // namespace ptb
