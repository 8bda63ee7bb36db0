#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attention.hpp"

namespace dfsim {

// Deterministic problem instance: Q, K, V filled in that order, row-major,
// from one splitmix64 stream seeded with `seed`, entries uniform in [-1, 1).
AttentionProblem generate_inputs(std::uint64_t seed, std::size_t n,
                                 std::size_t d);

struct ExperimentConfig {
  Variant variant = Variant::MemFree;
  std::vector<std::size_t> n_values;
  std::size_t d = 16;
  std::uint64_t seed = 1;
  DepthPolicy depths;
  bool scale_scores = false;
};

struct ExperimentRecord {
  std::string variant;
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  std::uint64_t seed = 0;
  std::string status;  // "completed" or "deadlock"
  std::uint64_t total_cycles = 0;
  std::uint64_t baseline_cycles = 0;
  // baseline_cycles / total_cycles; 1.0 means the bounded FIFOs cost no
  // cycles at all. 0.0 for runs that did not complete.
  double throughput_ratio = 0.0;
  // Peak simultaneous occupancy, maximized over the channels that carry
  // intermediate data (source-fed input channels are staging, not part of
  // the pipeline's memory demand; see README).
  std::uint64_t max_peak_occupancy = 0;
  // Peak occupancy of the long FIFO(s); 0 when the layout has none.
  std::uint64_t long_fifo_peak = 0;
  // vs the dense reference, relative to its largest-magnitude entry.
  // NaN for runs that did not complete.
  double oracle_max_rel_error = 0.0;
};

// Runs the variant once per n: once with the configured depths and once
// with everything unbounded as the throughput baseline.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg);

enum class ReportFormat { Json, Csv };

// Serializes records (JSON array of objects, or CSV with a header row).
// Floating-point fields keep 17 significant digits so they parse back to
// the same doubles. Throws ConfigError when records is empty.
std::string format_report(const std::vector<ExperimentRecord>& records,
                          ReportFormat format);
void write_report(const std::vector<ExperimentRecord>& records,
                  ReportFormat format, const std::string& path);

struct VerifySummary {
  std::uint64_t cases = 0;
  std::uint64_t failures = 0;
  double worst_error[4] = {0, 0, 0, 0};  // indexed by Variant
  double tolerance = 0.0;
};

// Runs every variant against the dense reference over a fixed grid
// (n in {1,2,4,16,64}, d in {1,4,16}, seeds {seed, seed+1, seed+2}) at
// default depths. A case fails if it deadlocks or exceeds the tolerance.
VerifySummary verify_against_oracle(std::uint64_t seed);

// Full simulation report as a deterministic JSON string (debugging and
// reproducibility checks).
std::string report_to_json(const SimulationReport& report);

}  // namespace dfsim
