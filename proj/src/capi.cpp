#include "dfsim/dfsim.h"

#include <cstring>
#include <string>

#include "attention.hpp"
#include "experiment.hpp"

using namespace dfsim;

namespace {

thread_local std::string g_error;

dfsim_status fail(dfsim_status code, const std::string& message) {
  g_error = message;
  return code;
}

// Runs `fn`, translating exceptions into status codes at the ABI boundary.
template <typename Fn>
dfsim_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const ProtocolError& e) {
    return fail(DFSIM_ERROR_PROTOCOL, e.what());
  } catch (const std::exception& e) {
    return fail(DFSIM_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(DFSIM_ERROR_INTERNAL, "unknown error");
  }
}

std::optional<Variant> to_variant(dfsim_variant v) {
  switch (v) {
    case DFSIM_VARIANT_NAIVE: return Variant::Naive;
    case DFSIM_VARIANT_SCALED: return Variant::Scaled;
    case DFSIM_VARIANT_REORDERED: return Variant::Reordered;
    case DFSIM_VARIANT_MEMFREE: return Variant::MemFree;
  }
  return std::nullopt;
}

DepthPolicy to_policy(const dfsim_depth_policy* policy) {
  DepthPolicy out;  // zero-valued fields mean "default"
  if (!policy) return out;
  if (policy->short_depth != 0) out.short_depth = policy->short_depth;
  if (policy->long_depth != 0) out.long_depth = policy->long_depth;
  out.baseline = policy->baseline != 0;
  return out;
}

void copy_string(char* dst, std::size_t cap, const std::string& src) {
  std::snprintf(dst, cap, "%s", src.c_str());
}

Matrix matrix_from(const double* data, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  std::memcpy(m.data.data(), data, rows * cols * sizeof(double));
  return m;
}

}  // namespace

struct dfsim_problem {
  AttentionProblem problem;
};

struct dfsim_run_result {
  std::size_t n = 0;
  std::size_t d = 0;
  VariantResult result;
};

struct dfsim_experiment {
  std::vector<ExperimentRecord> records;
};

extern "C" {

const char* dfsim_error_message(void) { return g_error.c_str(); }

const char* dfsim_status_name(dfsim_status status) {
  switch (status) {
    case DFSIM_OK: return "ok";
    case DFSIM_ERROR_INVALID_ARGUMENT: return "invalid_argument";
    case DFSIM_ERROR_PROTOCOL: return "protocol_error";
    case DFSIM_ERROR_IO: return "io_error";
    case DFSIM_ERROR_INTERNAL: return "internal_error";
  }
  return "?";
}

dfsim_status dfsim_problem_generate(uint64_t seed, uint64_t n, uint64_t d,
                                    dfsim_problem** out) {
  if (!out) return fail(DFSIM_ERROR_INVALID_ARGUMENT, "out is NULL");
  return guarded([&] {
    *out = new dfsim_problem{generate_inputs(seed, n, d)};
    return DFSIM_OK;
  });
}

dfsim_status dfsim_problem_create(uint64_t n, uint64_t d, const double* q,
                                  const double* k, const double* v,
                                  dfsim_problem** out) {
  if (!out || !q || !k || !v) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "NULL argument");
  }
  return guarded([&] {
    if (n == 0 || d == 0) throw ConfigError("n and d must be >= 1");
    *out = new dfsim_problem{AttentionProblem(
        matrix_from(q, n, d), matrix_from(k, n, d), matrix_from(v, n, d))};
    return DFSIM_OK;
  });
}

void dfsim_problem_destroy(dfsim_problem* problem) { delete problem; }

dfsim_status dfsim_oracle_attention(const dfsim_problem* problem,
                                    int subtract_max, int scale_scores,
                                    double* out) {
  if (!problem || !out) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "NULL argument");
  }
  return guarded([&] {
    Matrix m = oracle_attention(problem->problem, subtract_max != 0,
                                scale_scores != 0);
    std::memcpy(out, m.data.data(), m.data.size() * sizeof(double));
    return DFSIM_OK;
  });
}

dfsim_status dfsim_run(const dfsim_problem* problem, dfsim_variant variant,
                       const dfsim_depth_policy* policy, int scale_scores,
                       dfsim_run_result** out) {
  if (!problem || !out) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "NULL argument");
  }
  auto v = to_variant(variant);
  if (!v) return fail(DFSIM_ERROR_INVALID_ARGUMENT, "unknown variant");
  return guarded([&] {
    auto result = run_variant(problem->problem, *v, to_policy(policy),
                              scale_scores != 0);
    *out = new dfsim_run_result{problem->problem.n, problem->problem.d,
                                std::move(result)};
    return DFSIM_OK;
  });
}

void dfsim_run_result_destroy(dfsim_run_result* result) { delete result; }

dfsim_run_status dfsim_run_result_status(const dfsim_run_result* result) {
  return result && result->result.report.completed ? DFSIM_RUN_COMPLETED
                                                   : DFSIM_RUN_DEADLOCK;
}

uint64_t dfsim_run_result_total_cycles(const dfsim_run_result* result) {
  return result ? result->result.report.total_cycles : 0;
}

dfsim_status dfsim_run_result_output(const dfsim_run_result* result,
                                     double* out) {
  if (!result || !out) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "NULL argument");
  }
  if (!result->result.output) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "run did not complete");
  }
  const Matrix& m = *result->result.output;
  std::memcpy(out, m.data.data(), m.data.size() * sizeof(double));
  return DFSIM_OK;
}

size_t dfsim_run_result_channel_count(const dfsim_run_result* result) {
  return result ? result->result.report.channels.size() : 0;
}

const char* dfsim_run_result_channel_name(const dfsim_run_result* result,
                                          size_t index) {
  if (!result || index >= result->result.report.channels.size()) return NULL;
  return result->result.report.channels[index].name.c_str();
}

dfsim_status dfsim_run_result_channel_stats(const dfsim_run_result* result,
                                            size_t index,
                                            dfsim_channel_stats* out) {
  if (!result || !out || index >= result->result.report.channels.size()) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "bad channel index");
  }
  const ChannelReport& ch = result->result.report.channels[index];
  out->depth = ch.depth;
  out->latency = ch.latency;
  out->enqueued = ch.stats.enqueued;
  out->dequeued = ch.stats.dequeued;
  out->peak_occupancy = ch.stats.peak_occupancy;
  out->long_role = ch.long_role ? 1 : 0;
  out->source_fed = ch.source_fed ? 1 : 0;
  return DFSIM_OK;
}

size_t dfsim_run_result_blocked_count(const dfsim_run_result* result) {
  return result ? result->result.report.blocked.size() : 0;
}

const char* dfsim_run_result_blocked_node(const dfsim_run_result* result,
                                          size_t index) {
  if (!result || index >= result->result.report.blocked.size()) return NULL;
  return result->result.report.blocked[index].node_name.c_str();
}

const char* dfsim_run_result_blocked_channel(const dfsim_run_result* result,
                                             size_t index) {
  if (!result || index >= result->result.report.blocked.size()) return NULL;
  return result->result.report.blocked[index].channel_name.c_str();
}

int dfsim_run_result_blocked_on_send(const dfsim_run_result* result,
                                     size_t index) {
  if (!result || index >= result->result.report.blocked.size()) return 0;
  return result->result.report.blocked[index].state ==
                 NodeState::BlockedOnSend
             ? 1
             : 0;
}

dfsim_status dfsim_experiment_run(const dfsim_experiment_config* config,
                                  dfsim_experiment** out) {
  if (!config || !out || (!config->n_values && config->n_count > 0)) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "NULL argument");
  }
  auto v = to_variant(config->variant);
  if (!v) return fail(DFSIM_ERROR_INVALID_ARGUMENT, "unknown variant");
  return guarded([&] {
    ExperimentConfig cfg;
    cfg.variant = *v;
    cfg.n_values.assign(config->n_values,
                        config->n_values + config->n_count);
    cfg.d = config->d;
    cfg.seed = config->seed;
    cfg.depths = to_policy(&config->depths);
    cfg.scale_scores = config->scale_scores != 0;
    *out = new dfsim_experiment{run_experiment(cfg)};
    return DFSIM_OK;
  });
}

void dfsim_experiment_destroy(dfsim_experiment* experiment) {
  delete experiment;
}

size_t dfsim_experiment_record_count(const dfsim_experiment* experiment) {
  return experiment ? experiment->records.size() : 0;
}

dfsim_status dfsim_experiment_record(const dfsim_experiment* experiment,
                                     size_t index, dfsim_record* out) {
  if (!experiment || !out || index >= experiment->records.size()) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "bad record index");
  }
  const ExperimentRecord& r = experiment->records[index];
  copy_string(out->variant, sizeof(out->variant), r.variant);
  out->n = r.n;
  out->d = r.d;
  out->seed = r.seed;
  copy_string(out->status, sizeof(out->status), r.status);
  out->total_cycles = r.total_cycles;
  out->baseline_cycles = r.baseline_cycles;
  out->throughput_ratio = r.throughput_ratio;
  out->max_peak_occupancy = r.max_peak_occupancy;
  out->long_fifo_peak = r.long_fifo_peak;
  out->oracle_max_rel_error = r.oracle_max_rel_error;
  return DFSIM_OK;
}

namespace {

dfsim_status write_records(const std::vector<ExperimentRecord>& records,
                           dfsim_format format, const char* path) {
  if (format != DFSIM_FORMAT_JSON && format != DFSIM_FORMAT_CSV) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "unknown format");
  }
  try {
    write_report(records,
                 format == DFSIM_FORMAT_JSON ? ReportFormat::Json
                                             : ReportFormat::Csv,
                 path);
    return DFSIM_OK;
  } catch (const ConfigError& e) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(DFSIM_ERROR_IO, e.what());
  }
}

}  // namespace

dfsim_status dfsim_experiment_write(const dfsim_experiment* experiment,
                                    dfsim_format format, const char* path) {
  if (!experiment || !path) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "NULL argument");
  }
  return write_records(experiment->records, format, path);
}

dfsim_status dfsim_experiments_write(const dfsim_experiment* const* experiments,
                                     size_t count, dfsim_format format,
                                     const char* path) {
  if (!experiments || !path) {
    return fail(DFSIM_ERROR_INVALID_ARGUMENT, "NULL argument");
  }
  std::vector<ExperimentRecord> merged;
  for (size_t i = 0; i < count; ++i) {
    if (!experiments[i]) {
      return fail(DFSIM_ERROR_INVALID_ARGUMENT, "NULL experiment");
    }
    merged.insert(merged.end(), experiments[i]->records.begin(),
                  experiments[i]->records.end());
  }
  return write_records(merged, format, path);
}

dfsim_status dfsim_verify(uint64_t seed, dfsim_verify_summary* out) {
  if (!out) return fail(DFSIM_ERROR_INVALID_ARGUMENT, "out is NULL");
  return guarded([&] {
    VerifySummary summary = verify_against_oracle(seed);
    out->cases = summary.cases;
    out->failures = summary.failures;
    for (int i = 0; i < 4; ++i) out->worst_error[i] = summary.worst_error[i];
    out->tolerance = summary.tolerance;
    return DFSIM_OK;
  });
}

}  // extern "C"
