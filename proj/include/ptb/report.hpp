#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ptb {

enum class Verified { yes, no, skipped };

std::string to_string(Verified v);
Verified parse_verified(const std::string& s);

struct BenchResult {
  std::string variant;
  int nx = 0, ny = 0, nz = 0;
  int n = 1, t = 1, T = 1;
  int dl = 1, du = 1, dt = 0;
  std::string sync = "-";
  std::string storage = "twogrid";
  int sweeps = 0;  // time levels per timed run
  double seconds = 0;
  Verified verified = Verified::skipped;

  std::int64_t total_updates() const { return std::int64_t(nx) * ny * nz * sweeps; }
  double mlups() const { return seconds > 0 ? double(total_updates()) / seconds / 1e6 : 0.0; }
  friend bool operator==(const BenchResult&, const BenchResult&) = default;
};

inline constexpr const char* kReportHeader =
    "variant,nx,ny,nz,n,t,T,dl,du,dt,sync,storage,sweeps,seconds,mlups,verified";

void write_csv(std::ostream& os, std::span<const BenchResult> results);
void write_json(std::ostream& os, std::span<const BenchResult> results);
std::vector<BenchResult> read_csv(std::istream& is);
std::vector<BenchResult> read_json(std::istream& is);

}  // namespace ptb
