#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ptb/grid.hpp"
#include "ptb/pipeline.hpp"
#include "ptb/report.hpp"
#include "ptb/verify.hpp"

namespace ptb {

/// One benchmark variant: "naive", "blocked" or "pipeline" (sync and storage
/// come from the config).
struct Variant {
  std::string name;
  PipelineConfig cfg;
};

/// naive, blocked, then the pipeline in every sync x storage combination.
std::vector<Variant> all_variants(const PipelineConfig& base);

struct BenchOptions {
  GridDims dims;
  FillPattern pattern = FillPattern::random(1);
  /// Sweeps per timed run, in the variant's own unit: one time level for
  /// naive and blocked, one node sweep (U levels) for the pipeline.
  int sweeps = 1;
  int reps = 3;
  bool verify = true;
  double tol = 1e-13;
  BlockSize spatial_block{0, 0, 0};  // zero: default_block(dims)
};

/// Allocates, runs one untimed warmup sweep, then `reps` timed runs and
/// reports the median. With verification the final field is compared with
/// the oracle at the same number of time levels.
BenchResult run_bench(const Variant& v, const BenchOptions& opts);

/// Every configuration of the oracle-equivalence matrix on `size`^3 with
/// d_l = 1 that passes validation.
std::vector<PipelineConfig> equivalence_matrix(int size);

struct MatrixRow {
  PipelineConfig cfg;
  int levels = 0;
  Comparison cmp;
};

/// Runs each config for `sweeps` node sweeps from `pattern` and compares with
/// naive sweeps; the oracle trajectory is computed once and shared.
/// `progress`, if set, is called after each row.
std::vector<MatrixRow> verify_matrix(const GridDims& dims, const FillPattern& pattern,
                                     const std::vector<PipelineConfig>& configs, int sweeps, double tol,
                                     const std::function<void(const MatrixRow&)>& progress = {});

}  // namespace ptb
