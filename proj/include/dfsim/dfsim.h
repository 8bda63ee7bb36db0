/* dfsim: cycle-accurate simulator for streaming dataflow pipelines built
 * from parallel-pattern nodes, with bundled attention pipeline layouts.
 *
 * All functions returning dfsim_status report failure through the code and
 * leave output parameters untouched; dfsim_error_message() describes the
 * most recent failure on the calling thread. Objects are created and
 * released through matching _destroy calls; destroying NULL is a no-op.
 */
#ifndef DFSIM_H
#define DFSIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dfsim_status {
  DFSIM_OK = 0,
  DFSIM_ERROR_INVALID_ARGUMENT = 1, /* bad configuration or parameter */
  DFSIM_ERROR_PROTOCOL = 2,         /* simulation aborted on a stream violation */
  DFSIM_ERROR_IO = 3,               /* file could not be written */
  DFSIM_ERROR_INTERNAL = 4
} dfsim_status;

typedef enum dfsim_variant {
  DFSIM_VARIANT_NAIVE = 0,
  DFSIM_VARIANT_SCALED = 1,
  DFSIM_VARIANT_REORDERED = 2,
  DFSIM_VARIANT_MEMFREE = 3
} dfsim_variant;

typedef enum dfsim_run_status {
  DFSIM_RUN_COMPLETED = 0,
  DFSIM_RUN_DEADLOCK = 1
} dfsim_run_status;

typedef enum dfsim_format {
  DFSIM_FORMAT_JSON = 0,
  DFSIM_FORMAT_CSV = 1
} dfsim_format;

/* Channel depth meaning "unbounded". */
#define DFSIM_DEPTH_INFINITE UINT64_MAX

/* FIFO sizing for a pipeline build. Zero-valued depths select the defaults
 * (short: 2, long: n + 2). A nonzero `baseline` ignores both and makes
 * every channel unbounded. */
typedef struct dfsim_depth_policy {
  uint64_t short_depth;
  uint64_t long_depth;
  int baseline;
} dfsim_depth_policy;

typedef struct dfsim_channel_stats {
  uint64_t depth; /* DFSIM_DEPTH_INFINITE when unbounded */
  uint64_t latency;
  uint64_t enqueued;
  uint64_t dequeued;
  uint64_t peak_occupancy;
  int long_role;   /* sized by long_depth in this layout */
  int source_fed;  /* carries graph input, not intermediate data */
} dfsim_channel_stats;

typedef struct dfsim_record {
  char variant[16];
  uint64_t n;
  uint64_t d;
  uint64_t seed;
  char status[16]; /* "completed" or "deadlock" */
  uint64_t total_cycles;
  uint64_t baseline_cycles;
  double throughput_ratio;
  uint64_t max_peak_occupancy;
  uint64_t long_fifo_peak;
  double oracle_max_rel_error; /* NaN when the run did not complete */
} dfsim_record;

typedef struct dfsim_verify_summary {
  uint64_t cases;
  uint64_t failures;
  double worst_error[4]; /* indexed by dfsim_variant */
  double tolerance;
} dfsim_verify_summary;

typedef struct dfsim_problem dfsim_problem;
typedef struct dfsim_run_result dfsim_run_result;
typedef struct dfsim_experiment dfsim_experiment;

/* Thread-local message for the last failed call on this thread. */
const char* dfsim_error_message(void);
const char* dfsim_status_name(dfsim_status status);

/* --- problems ------------------------------------------------------- */

/* Deterministic instance: q, k, v are n x d, entries uniform in [-1, 1)
 * drawn from splitmix64(seed). Identical arguments give identical data on
 * every platform. */
dfsim_status dfsim_problem_generate(uint64_t seed, uint64_t n, uint64_t d,
                                    dfsim_problem** out);
/* q, k, v: row-major n x d arrays, all entries finite. */
dfsim_status dfsim_problem_create(uint64_t n, uint64_t d, const double* q,
                                  const double* k, const double* v,
                                  dfsim_problem** out);
void dfsim_problem_destroy(dfsim_problem* problem);

/* Dense reference output into `out` (row-major n x d). */
dfsim_status dfsim_oracle_attention(const dfsim_problem* problem,
                                    int subtract_max, int scale_scores,
                                    double* out);

/* --- single runs ----------------------------------------------------- */

/* Builds the variant's pipeline, simulates to completion or deadlock. */
dfsim_status dfsim_run(const dfsim_problem* problem, dfsim_variant variant,
                       const dfsim_depth_policy* policy, int scale_scores,
                       dfsim_run_result** out);
void dfsim_run_result_destroy(dfsim_run_result* result);

dfsim_run_status dfsim_run_result_status(const dfsim_run_result* result);
uint64_t dfsim_run_result_total_cycles(const dfsim_run_result* result);
/* Copies the n x d output matrix; fails unless the run completed. */
dfsim_status dfsim_run_result_output(const dfsim_run_result* result,
                                     double* out);

size_t dfsim_run_result_channel_count(const dfsim_run_result* result);
const char* dfsim_run_result_channel_name(const dfsim_run_result* result,
                                          size_t index);
dfsim_status dfsim_run_result_channel_stats(const dfsim_run_result* result,
                                            size_t index,
                                            dfsim_channel_stats* out);

/* Blocked nodes of a deadlocked run (empty for completed runs). */
size_t dfsim_run_result_blocked_count(const dfsim_run_result* result);
const char* dfsim_run_result_blocked_node(const dfsim_run_result* result,
                                          size_t index);
const char* dfsim_run_result_blocked_channel(const dfsim_run_result* result,
                                             size_t index);
/* Nonzero when the node is blocked sending (else blocked receiving). */
int dfsim_run_result_blocked_on_send(const dfsim_run_result* result,
                                     size_t index);

/* --- experiments ------------------------------------------------------ */

typedef struct dfsim_experiment_config {
  dfsim_variant variant;
  const uint64_t* n_values;
  size_t n_count;
  uint64_t d;
  uint64_t seed;
  dfsim_depth_policy depths;
  int scale_scores;
} dfsim_experiment_config;

/* One record per n: the configured run plus an unbounded-depth baseline. */
dfsim_status dfsim_experiment_run(const dfsim_experiment_config* config,
                                  dfsim_experiment** out);
void dfsim_experiment_destroy(dfsim_experiment* experiment);

size_t dfsim_experiment_record_count(const dfsim_experiment* experiment);
dfsim_status dfsim_experiment_record(const dfsim_experiment* experiment,
                                     size_t index, dfsim_record* out);
dfsim_status dfsim_experiment_write(const dfsim_experiment* experiment,
                                    dfsim_format format, const char* path);
/* Writes the concatenated records of several experiments. */
dfsim_status dfsim_experiments_write(const dfsim_experiment* const* experiments,
                                     size_t count, dfsim_format format,
                                     const char* path);

/* --- verification ----------------------------------------------------- */

/* Every variant against the dense reference over a built-in grid
 * (n in {1,2,4,16,64}, d in {1,4,16}, seeds {seed..seed+2}). */
dfsim_status dfsim_verify(uint64_t seed, dfsim_verify_summary* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DFSIM_H */
