#include "ptb/report.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ptb {

std::string to_string(Verified v) {
  switch (v) {
    case Verified::yes: return "yes";
    case Verified::no: return "no";
    case Verified::skipped: return "skipped";
  }
  return "skipped";
}

Verified parse_verified(const std::string& s) {
  if (s == "yes") return Verified::yes;
  if (s == "no") return Verified::no;
  if (s == "skipped") return Verified::skipped;
  throw std::invalid_argument("unknown verification status: " + s);
}

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, std::span<const BenchResult> results) {
  os << kReportHeader << '\n';
  for (const BenchResult& r : results)
    os << r.variant << ',' << r.nx << ',' << r.ny << ',' << r.nz << ',' << r.n << ',' << r.t << ','
       << r.T << ',' << r.dl << ',' << r.du << ',' << r.dt << ',' << r.sync << ',' << r.storage << ','
       << r.sweeps << ',' << exact(r.seconds) << ',' << exact(r.mlups()) << ','
       << to_string(r.verified) << '\n';
}

void write_json(std::ostream& os, std::span<const BenchResult> results) {
  auto rows = nlohmann::json::array();
  for (const BenchResult& r : results)
    rows.push_back({{"variant", r.variant}, {"nx", r.nx},           {"ny", r.ny},
                    {"nz", r.nz},           {"n", r.n},             {"t", r.t},
                    {"T", r.T},             {"dl", r.dl},           {"du", r.du},
                    {"dt", r.dt},           {"sync", r.sync},       {"storage", r.storage},
                    {"sweeps", r.sweeps},   {"seconds", r.seconds}, {"mlups", r.mlups()},
                    {"verified", to_string(r.verified)}});
  os << rows.dump(2) << '\n';
}

std::vector<BenchResult> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kReportHeader) throw std::runtime_error("report: bad CSV header");
  std::vector<BenchResult> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 16) throw std::runtime_error("report: expected 16 fields, got " + std::to_string(f.size()));
    BenchResult r;
    r.variant = f[0];
    r.nx = std::stoi(f[1]);
    r.ny = std::stoi(f[2]);
    r.nz = std::stoi(f[3]);
    r.n = std::stoi(f[4]);
    r.t = std::stoi(f[5]);
    r.T = std::stoi(f[6]);
    r.dl = std::stoi(f[7]);
    r.du = std::stoi(f[8]);
    r.dt = std::stoi(f[9]);
    r.sync = f[10];
    r.storage = f[11];
    r.sweeps = std::stoi(f[12]);
    r.seconds = std::stod(f[13]);
    r.verified = parse_verified(f[15]);
    out.push_back(r);
  }
  return out;
}

std::vector<BenchResult> read_json(std::istream& is) {
  const auto rows = nlohmann::json::parse(is);
  std::vector<BenchResult> out;
  for (const auto& j : rows) {
    BenchResult r;
    r.variant = j.at("variant").get<std::string>();
    r.nx = j.at("nx");
    r.ny = j.at("ny");
    r.nz = j.at("nz");
    r.n = j.at("n");
    r.t = j.at("t");
    r.T = j.at("T");
    r.dl = j.at("dl");
    r.du = j.at("du");
    r.dt = j.at("dt");
    r.sync = j.at("sync").get<std::string>();
    r.storage = j.at("storage").get<std::string>();
    r.sweeps = j.at("sweeps");
    r.seconds = j.at("seconds");
    r.verified = parse_verified(j.at("verified").get<std::string>());
    out.push_back(r);
  }
  return out;
}

}  // namespace ptb
