// Command line front end; talks to the simulator exclusively through the
// public C API.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dfsim/dfsim.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDeadlock = 3;

struct ExperimentDeleter {
  void operator()(dfsim_experiment* e) const { dfsim_experiment_destroy(e); }
};
using ExperimentPtr = std::unique_ptr<dfsim_experiment, ExperimentDeleter>;

int api_error(const char* what, dfsim_status status) {
  std::fprintf(stderr, "error: %s: %s (%s)\n", what, dfsim_error_message(),
               dfsim_status_name(status));
  return kExitUsage;
}

struct RunOptions {
  std::string variant;
  std::vector<std::uint64_t> n_values;
  std::uint64_t d = 16;
  std::uint64_t seed = 1;
  std::uint64_t short_depth = 0;  // 0: default (2)
  std::uint64_t long_depth = 0;   // 0: default (n + 2)
  bool baseline = false;
  bool scale_scores = false;
  std::string format = "json";
  std::string out_path;
  bool expect_complete = false;
};

dfsim_variant parse_variant(const std::string& name) {
  if (name == "naive") return DFSIM_VARIANT_NAIVE;
  if (name == "scaled") return DFSIM_VARIANT_SCALED;
  if (name == "reordered") return DFSIM_VARIANT_REORDERED;
  return DFSIM_VARIANT_MEMFREE;
}

ExperimentPtr run_one(const RunOptions& opts, dfsim_variant variant,
                      dfsim_status* status) {
  dfsim_experiment_config cfg{};
  cfg.variant = variant;
  cfg.n_values = opts.n_values.data();
  cfg.n_count = opts.n_values.size();
  cfg.d = opts.d;
  cfg.seed = opts.seed;
  cfg.depths.short_depth = opts.short_depth;
  cfg.depths.long_depth = opts.long_depth;
  cfg.depths.baseline = opts.baseline ? 1 : 0;
  cfg.scale_scores = opts.scale_scores ? 1 : 0;

  dfsim_experiment* exp = nullptr;
  *status = dfsim_experiment_run(&cfg, &exp);
  return ExperimentPtr(exp);
}

void print_header() {
  std::printf("%-10s %6s %4s %6s %-10s %12s %12s %8s %9s %9s %12s\n",
              "variant", "n", "d", "seed", "status", "cycles", "baseline",
              "ratio", "max_peak", "long_peak", "oracle_err");
}

// Returns true when every record in the experiment completed.
bool print_records(const dfsim_experiment* exp) {
  bool all_completed = true;
  const size_t count = dfsim_experiment_record_count(exp);
  for (size_t i = 0; i < count; ++i) {
    dfsim_record r{};
    dfsim_experiment_record(exp, i, &r);
    std::printf("%-10s %6" PRIu64 " %4" PRIu64 " %6" PRIu64
                " %-10s %12" PRIu64 " %12" PRIu64 " %8.4f %9" PRIu64
                " %9" PRIu64 " %12.3e\n",
                r.variant, r.n, r.d, r.seed, r.status, r.total_cycles,
                r.baseline_cycles, r.throughput_ratio, r.max_peak_occupancy,
                r.long_fifo_peak, r.oracle_max_rel_error);
    if (std::string(r.status) != "completed") all_completed = false;
  }
  return all_completed;
}

int write_experiments(const std::vector<const dfsim_experiment*>& exps,
                      const std::string& format, const std::string& path) {
  if (path.empty()) return kExitOk;
  const dfsim_format fmt =
      format == "csv" ? DFSIM_FORMAT_CSV : DFSIM_FORMAT_JSON;
  dfsim_status status =
      dfsim_experiments_write(exps.data(), exps.size(), fmt, path.c_str());
  if (status != DFSIM_OK) return api_error("writing report", status);
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

int cmd_run(const RunOptions& opts) {
  dfsim_status status = DFSIM_OK;
  ExperimentPtr exp = run_one(opts, parse_variant(opts.variant), &status);
  if (status != DFSIM_OK) return api_error("running experiment", status);

  print_header();
  const bool all_completed = print_records(exp.get());
  const int write_rc =
      write_experiments({exp.get()}, opts.format, opts.out_path);
  if (write_rc != kExitOk) return write_rc;
  if (!all_completed && opts.expect_complete) {
    std::fprintf(stderr, "error: a run deadlocked but --expect-complete "
                         "was given\n");
    return kExitDeadlock;
  }
  return kExitOk;
}

int cmd_sweep(const RunOptions& opts) {
  static const dfsim_variant kAll[] = {DFSIM_VARIANT_NAIVE,
                                       DFSIM_VARIANT_SCALED,
                                       DFSIM_VARIANT_REORDERED,
                                       DFSIM_VARIANT_MEMFREE};
  std::vector<ExperimentPtr> experiments;
  print_header();
  for (dfsim_variant v : kAll) {
    dfsim_status status = DFSIM_OK;
    ExperimentPtr exp = run_one(opts, v, &status);
    if (status != DFSIM_OK) return api_error("running experiment", status);
    print_records(exp.get());
    experiments.push_back(std::move(exp));
  }
  std::vector<const dfsim_experiment*> raw;
  for (const auto& e : experiments) raw.push_back(e.get());
  return write_experiments(raw, opts.format, opts.out_path);
}

int cmd_verify(std::uint64_t seed) {
  dfsim_verify_summary summary{};
  dfsim_status status = dfsim_verify(seed, &summary);
  if (status != DFSIM_OK) return api_error("verification", status);

  static const char* kNames[] = {"naive", "scaled", "reordered", "memfree"};
  for (int i = 0; i < 4; ++i) {
    std::printf("%-10s worst error %.3e (tolerance %.1e)\n", kNames[i],
                summary.worst_error[i], summary.tolerance);
  }
  std::printf("%" PRIu64 "/%" PRIu64 " cases passed\n",
              summary.cases - summary.failures, summary.cases);
  if (summary.failures != 0) {
    std::fprintf(stderr, "error: %" PRIu64 " case(s) failed\n",
                 summary.failures);
    return kExitVerifyFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-accurate dataflow pipeline simulator"};
  app.require_subcommand(1);

  RunOptions run_opts;
  CLI::App* run = app.add_subcommand(
      "run", "Simulate one pipeline layout across a list of n values");
  run->add_option("--variant", run_opts.variant, "Pipeline layout")
      ->required()
      ->check(CLI::IsMember({"naive", "scaled", "reordered", "memfree"}));
  run->add_option("--n", run_opts.n_values, "Row counts (comma separated)")
      ->required()
      ->delimiter(',');
  run->add_option("--d", run_opts.d, "Row width (default 16)");
  run->add_option("--seed", run_opts.seed, "Input generator seed");
  run->add_option("--short-depth", run_opts.short_depth,
                  "Depth of ordinary FIFOs (default 2)");
  run->add_option("--long-depth", run_opts.long_depth,
                  "Depth of long FIFOs (default n + 2)");
  run->add_flag("--baseline", run_opts.baseline,
                "Make every FIFO unbounded");
  run->add_flag("--scale-scores", run_opts.scale_scores,
                "Divide scores by sqrt(d)");
  run->add_option("--format", run_opts.format, "Report format for --out")
      ->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--out", run_opts.out_path, "Write records to this file");
  run->add_flag("--expect-complete", run_opts.expect_complete,
                "Exit 3 if any run deadlocks");

  RunOptions sweep_opts;
  sweep_opts.n_values = {16, 32, 64, 128};
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Occupancy-vs-n table across all four pipeline layouts");
  sweep->add_option("--n", sweep_opts.n_values,
                    "Row counts (default 16,32,64,128)")
      ->delimiter(',');
  sweep->add_option("--d", sweep_opts.d, "Row width (default 16)");
  sweep->add_option("--seed", sweep_opts.seed, "Input generator seed");
  sweep->add_flag("--baseline", sweep_opts.baseline,
                  "Make every FIFO unbounded");
  sweep->add_flag("--scale-scores", sweep_opts.scale_scores,
                  "Divide scores by sqrt(d)");
  sweep->add_option("--format", sweep_opts.format, "Report format for --out")
      ->check(CLI::IsMember({"json", "csv"}));
  sweep->add_option("--out", sweep_opts.out_path,
                    "Write records to this file");

  std::uint64_t verify_seed = 1;
  CLI::App* verify = app.add_subcommand(
      "verify", "Check every layout against the dense reference");
  verify->add_option("--seed", verify_seed, "First seed of the grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (run->parsed()) return cmd_run(run_opts);
  if (sweep->parsed()) return cmd_sweep(sweep_opts);
  return cmd_verify(verify_seed);
}
