#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "attention.hpp"
#include "dfsim/dfsim.h"
#include "experiment.hpp"

namespace {

struct Problem {
  dfsim_problem* p = nullptr;
  ~Problem() { dfsim_problem_destroy(p); }
};

struct RunResult {
  dfsim_run_result* r = nullptr;
  ~RunResult() { dfsim_run_result_destroy(r); }
};

struct Experiment {
  dfsim_experiment* e = nullptr;
  ~Experiment() { dfsim_experiment_destroy(e); }
};

std::string temp_path(const char* name) {
  return std::string("/tmp/dfsim_capi_") + name;
}

std::string slurp(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f != nullptr);
  std::string text;
  char buf[4096];
  size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) {
    text.append(buf, got);
  }
  std::fclose(f);
  return text;
}

}  // namespace

TEST_CASE("invalid arguments are reported with a message, not a crash") {
  Problem p;
  CHECK(dfsim_problem_generate(1, 0, 4, &p.p) ==
        DFSIM_ERROR_INVALID_ARGUMENT);
  CHECK(p.p == nullptr);
  CHECK(std::strlen(dfsim_error_message()) > 0);
  CHECK(dfsim_problem_generate(1, 4, 4, nullptr) ==
        DFSIM_ERROR_INVALID_ARGUMENT);

  const double nan = std::nan("");
  const double q[1] = {nan}, k[1] = {0}, v[1] = {0};
  CHECK(dfsim_problem_create(1, 1, q, k, v, &p.p) ==
        DFSIM_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("status names are stable strings") {
  CHECK(std::string(dfsim_status_name(DFSIM_OK)) == "ok");
  CHECK(std::string(dfsim_status_name(DFSIM_ERROR_INVALID_ARGUMENT)) ==
        "invalid_argument");
  CHECK(std::string(dfsim_status_name(DFSIM_ERROR_IO)) == "io_error");
}

TEST_CASE("generated problems and the reference match the native library") {
  Problem p;
  REQUIRE(dfsim_problem_generate(11, 4, 3, &p.p) == DFSIM_OK);

  std::vector<double> out(4 * 3);
  REQUIRE(dfsim_oracle_attention(p.p, 1, 0, out.data()) == DFSIM_OK);

  auto native = dfsim::generate_inputs(11, 4, 3);
  auto want = dfsim::oracle_attention(native, true, false);
  CHECK(out == want.data);
}

TEST_CASE("a completed run exposes output, cycles and channel stats") {
  Problem p;
  REQUIRE(dfsim_problem_generate(1, 4, 2, &p.p) == DFSIM_OK);
  RunResult run;
  REQUIRE(dfsim_run(p.p, DFSIM_VARIANT_MEMFREE, nullptr, 0, &run.r) ==
          DFSIM_OK);
  CHECK(dfsim_run_result_status(run.r) == DFSIM_RUN_COMPLETED);
  CHECK(dfsim_run_result_total_cycles(run.r) == 22);  // n^2 + 6 for n = 4
  CHECK(dfsim_run_result_blocked_count(run.r) == 0);

  std::vector<double> out(4 * 2);
  REQUIRE(dfsim_run_result_output(run.r, out.data()) == DFSIM_OK);
  auto native = dfsim::generate_inputs(1, 4, 2);
  auto want = dfsim::oracle_attention(native, true, false);
  dfsim::Matrix got(4, 2);
  got.data = out;
  CHECK(dfsim::max_relative_error(got, want) <= 1e-9);

  const size_t channels = dfsim_run_result_channel_count(run.r);
  CHECK(channels == 11);
  bool saw_input_staging = false;
  for (size_t i = 0; i < channels; ++i) {
    dfsim_channel_stats stats{};
    REQUIRE(dfsim_run_result_channel_stats(run.r, i, &stats) == DFSIM_OK);
    CHECK(stats.depth == 2);
    CHECK(stats.latency == 1);
    CHECK(stats.long_role == 0);
    if (stats.source_fed) saw_input_staging = true;
    if (!stats.source_fed) CHECK(stats.peak_occupancy <= 1);
  }
  CHECK(saw_input_staging);

  // A zeroed policy means defaults, same as passing NULL.
  dfsim_depth_policy defaults{};
  RunResult again;
  REQUIRE(dfsim_run(p.p, DFSIM_VARIANT_MEMFREE, &defaults, 0, &again.r) ==
          DFSIM_OK);
  CHECK(dfsim_run_result_total_cycles(again.r) ==
        dfsim_run_result_total_cycles(run.r));
}

TEST_CASE("a deadlocked run names the stuck node and channel") {
  Problem p;
  REQUIRE(dfsim_problem_generate(1, 8, 4, &p.p) == DFSIM_OK);
  dfsim_depth_policy policy{};
  policy.long_depth = 2;
  RunResult run;
  REQUIRE(dfsim_run(p.p, DFSIM_VARIANT_NAIVE, &policy, 0, &run.r) == DFSIM_OK);
  CHECK(dfsim_run_result_status(run.r) == DFSIM_RUN_DEADLOCK);

  std::vector<double> out(8 * 4);
  CHECK(dfsim_run_result_output(run.r, out.data()) != DFSIM_OK);

  bool found = false;
  for (size_t i = 0; i < dfsim_run_result_blocked_count(run.r); ++i) {
    if (std::string(dfsim_run_result_blocked_node(run.r, i)) == "split_exp") {
      found = true;
      CHECK(std::string(dfsim_run_result_blocked_channel(run.r, i)) ==
            "exp_long");
      CHECK(dfsim_run_result_blocked_on_send(run.r, i) == 1);
    }
  }
  CHECK(found);

  // The undersized FIFO is still identifiable in the stats.
  for (size_t i = 0; i < dfsim_run_result_channel_count(run.r); ++i) {
    if (std::string(dfsim_run_result_channel_name(run.r, i)) == "exp_long") {
      dfsim_channel_stats stats{};
      REQUIRE(dfsim_run_result_channel_stats(run.r, i, &stats) == DFSIM_OK);
      CHECK(stats.long_role == 1);
      CHECK(stats.depth == 2);
    }
  }
}

TEST_CASE("experiments produce one record per n and write both formats") {
  const uint64_t n_values[] = {4, 8};
  dfsim_experiment_config cfg{};
  cfg.variant = DFSIM_VARIANT_MEMFREE;
  cfg.n_values = n_values;
  cfg.n_count = 2;
  cfg.d = 4;
  cfg.seed = 1;
  Experiment exp;
  REQUIRE(dfsim_experiment_run(&cfg, &exp.e) == DFSIM_OK);
  REQUIRE(dfsim_experiment_record_count(exp.e) == 2);

  dfsim_record r{};
  REQUIRE(dfsim_experiment_record(exp.e, 1, &r) == DFSIM_OK);
  CHECK(std::string(r.variant) == "memfree");
  CHECK(r.n == 8);
  CHECK(std::string(r.status) == "completed");
  CHECK(r.throughput_ratio == 1.0);

  auto json_path = temp_path("report.json");
  REQUIRE(dfsim_experiment_write(exp.e, DFSIM_FORMAT_JSON,
                                 json_path.c_str()) == DFSIM_OK);
  CHECK(slurp(json_path).find("\"memfree\"") != std::string::npos);

  auto csv_path = temp_path("report.csv");
  REQUIRE(dfsim_experiment_write(exp.e, DFSIM_FORMAT_CSV, csv_path.c_str()) ==
          DFSIM_OK);
  CHECK(slurp(csv_path).rfind("variant,", 0) == 0);

  CHECK(dfsim_experiment_write(exp.e, DFSIM_FORMAT_JSON,
                               "/nonexistent/dir/report.json") ==
        DFSIM_ERROR_IO);

  // Merged output concatenates records in argument order.
  cfg.variant = DFSIM_VARIANT_NAIVE;
  Experiment exp2;
  REQUIRE(dfsim_experiment_run(&cfg, &exp2.e) == DFSIM_OK);
  const dfsim_experiment* both[] = {exp.e, exp2.e};
  auto merged_path = temp_path("merged.csv");
  REQUIRE(dfsim_experiments_write(both, 2, DFSIM_FORMAT_CSV,
                                  merged_path.c_str()) == DFSIM_OK);
  auto merged = slurp(merged_path);
  size_t rows = 0;
  for (char c : merged) rows += c == '\n';
  CHECK(rows == 5);  // header + 2 + 2
}

TEST_CASE("verification sweeps the built-in grid") {
  dfsim_verify_summary summary{};
  REQUIRE(dfsim_verify(1, &summary) == DFSIM_OK);
  CHECK(summary.cases == 180);
  CHECK(summary.failures == 0);
  CHECK(summary.tolerance == 1e-9);
  for (double err : summary.worst_error) {
    CHECK(err <= summary.tolerance);
  }
}
