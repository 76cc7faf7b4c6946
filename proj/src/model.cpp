#include "ptb/model.hpp"

#include <stdexcept>

namespace ptb {

void MachineParams::validate() const {
  if (!(mem_saturated > 0) || !(mem_single > 0) || !(cache > 0))
    throw std::invalid_argument("bandwidths must be positive");
}

void NetworkParams::validate() const {
  if (!(bandwidth > 0) || !(latency > 0) || !(node_rate > 0))
    throw std::invalid_argument("network parameters must be positive");
}

double baseline_perf(double mem_saturated) {
  if (!(mem_saturated > 0)) throw std::invalid_argument("bandwidth must be positive");
  return mem_saturated / 16.0;
}

double team_block_time(const MachineParams& m, int t, int T) {
  m.validate();
  if (t < 1 || T < 1) throw std::invalid_argument("t and T must be >= 1");
  const double tT = double(t) * T;
  return 16.0 / m.mem_single * (1.0 + (tT - 1.0) * m.mem_single / m.cache);
}

double pipelined_speedup(const MachineParams& m, int t, int T) {
  m.validate();
  if (t < 1 || T < 1) throw std::invalid_argument("t and T must be >= 1");
  const double tT = double(t) * T;
  return m.mem_single / m.mem_saturated * tT / (1.0 + (tT - 1.0) * m.mem_single / m.cache);
}

HaloTime multihalo_time(int L, int h, const NetworkParams& net) {
  net.validate();
  if (L < 1 || h < 1) throw std::invalid_argument("L and h must be >= 1");
  const double l = L;
  double cells = 0;
  for (int s = 1; s <= h; ++s) {
    const double e = l + (h - s);
    cells += e * e * e;
  }
  HaloTime r;
  r.bulk = h * l * l * l / net.node_rate;
  r.face = cells / net.node_rate - r.bulk;
  const double w = l + (h - 1);
  for (double area : {l * l, w * l, w * w}) r.comm += 2.0 * (net.latency + 8.0 * h * area / net.bandwidth);
  return r;
}

double multihalo_ratio(int L, int h, const NetworkParams& net) {
  return h * multihalo_time(L, 1, net).total() / multihalo_time(L, h, net).total();
}

double efficiency(int L, int h, const NetworkParams& net) {
  const HaloTime t = multihalo_time(L, h, net);
  return t.compute() / t.total();
}

}  // namespace ptb
