#include "experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "rng.hpp"

namespace dfsim {

namespace {

using ordered_json = nlohmann::ordered_json;

Matrix random_matrix(SplitMix64& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& x : m.data) x = rng.uniform_signed();
  return m;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::uint64_t peak_over(const SimulationReport& report,
                        bool (*pred)(const ChannelReport&)) {
  std::uint64_t peak = 0;
  for (const ChannelReport& ch : report.channels) {
    if (pred(ch)) peak = std::max(peak, ch.stats.peak_occupancy);
  }
  return peak;
}

ordered_json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Scalar: return v.as_scalar();
    case Value::Kind::Vector: {
      auto s = v.as_vector();
      return ordered_json(std::vector<double>(s.begin(), s.end()));
    }
    case Value::Kind::Pair: {
      auto [a, b] = v.as_pair();
      return ordered_json{{"pair", {a, b}}};
    }
  }
  return nullptr;
}

}  // namespace

AttentionProblem generate_inputs(std::uint64_t seed, std::size_t n,
                                 std::size_t d) {
  if (n == 0 || d == 0) throw ConfigError("n and d must be >= 1");
  SplitMix64 rng(seed);
  Matrix q = random_matrix(rng, n, d);
  Matrix k = random_matrix(rng, n, d);
  Matrix v = random_matrix(rng, n, d);
  return AttentionProblem(std::move(q), std::move(k), std::move(v));
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_values.empty()) throw ConfigError("no n values given");
  std::vector<ExperimentRecord> records;
  records.reserve(cfg.n_values.size());

  DepthPolicy baseline_policy = cfg.depths;
  baseline_policy.baseline = true;

  for (std::size_t n : cfg.n_values) {
    AttentionProblem problem = generate_inputs(cfg.seed, n, cfg.d);
    VariantResult primary =
        run_variant(problem, cfg.variant, cfg.depths, cfg.scale_scores);
    VariantResult baseline =
        run_variant(problem, cfg.variant, baseline_policy, cfg.scale_scores);

    ExperimentRecord rec;
    rec.variant = variant_name(cfg.variant);
    rec.n = n;
    rec.d = cfg.d;
    rec.seed = cfg.seed;
    rec.status = primary.report.completed ? "completed" : "deadlock";
    rec.total_cycles = primary.report.total_cycles;
    rec.baseline_cycles = baseline.report.total_cycles;
    rec.max_peak_occupancy = peak_over(
        primary.report, [](const ChannelReport& ch) { return !ch.source_fed; });
    rec.long_fifo_peak = peak_over(
        primary.report, [](const ChannelReport& ch) { return ch.long_role; });
    if (primary.output) {
      rec.throughput_ratio = double(rec.baseline_cycles) /
                             double(rec.total_cycles);
      Matrix reference =
          oracle_attention(problem, /*subtract_max=*/true, cfg.scale_scores);
      rec.oracle_max_rel_error =
          max_relative_error(*primary.output, reference);
    } else {
      rec.throughput_ratio = 0.0;
      rec.oracle_max_rel_error = std::numeric_limits<double>::quiet_NaN();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string format_report(const std::vector<ExperimentRecord>& records,
                          ReportFormat format) {
  if (records.empty()) throw ConfigError("no records to report");

  if (format == ReportFormat::Json) {
    ordered_json arr = ordered_json::array();
    for (const ExperimentRecord& r : records) {
      arr.push_back({{"variant", r.variant},
                     {"n", r.n},
                     {"d", r.d},
                     {"seed", r.seed},
                     {"status", r.status},
                     {"total_cycles", r.total_cycles},
                     {"baseline_cycles", r.baseline_cycles},
                     {"throughput_ratio", r.throughput_ratio},
                     {"max_peak_occupancy", r.max_peak_occupancy},
                     {"long_fifo_peak", r.long_fifo_peak},
                     {"oracle_max_rel_error", r.oracle_max_rel_error}});
    }
    return arr.dump(2) + "\n";
  }

  std::string out =
      "variant,n,d,seed,status,total_cycles,baseline_cycles,"
      "throughput_ratio,max_peak_occupancy,long_fifo_peak,"
      "oracle_max_rel_error\n";
  for (const ExperimentRecord& r : records) {
    out += r.variant + ',' + std::to_string(r.n) + ',' + std::to_string(r.d) +
           ',' + std::to_string(r.seed) + ',' + r.status + ',' +
           std::to_string(r.total_cycles) + ',' +
           std::to_string(r.baseline_cycles) + ',' +
           format_double(r.throughput_ratio) + ',' +
           std::to_string(r.max_peak_occupancy) + ',' +
           std::to_string(r.long_fifo_peak) + ',' +
           format_double(r.oracle_max_rel_error) + '\n';
  }
  return out;
}

void write_report(const std::vector<ExperimentRecord>& records,
                  ReportFormat format, const std::string& path) {
  const std::string body = format_report(records, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << body;
  if (!out.flush()) throw std::runtime_error("failed writing '" + path + "'");
}

VerifySummary verify_against_oracle(std::uint64_t seed) {
  static constexpr std::size_t kNs[] = {1, 2, 4, 16, 64};
  static constexpr std::size_t kDs[] = {1, 4, 16};
  static constexpr Variant kVariants[] = {Variant::Naive, Variant::Scaled,
                                          Variant::Reordered,
                                          Variant::MemFree};
  VerifySummary summary;
  summary.tolerance = 1e-9;
  for (Variant variant : kVariants) {
    for (std::size_t n : kNs) {
      for (std::size_t d : kDs) {
        for (std::uint64_t s = seed; s < seed + 3; ++s) {
          AttentionProblem problem = generate_inputs(s, n, d);
          VariantResult result = run_variant(problem, variant, DepthPolicy{});
          ++summary.cases;
          if (!result.output) {
            ++summary.failures;
            continue;
          }
          Matrix reference = oracle_attention(problem, true, false);
          const double err = max_relative_error(*result.output, reference);
          double& worst = summary.worst_error[static_cast<int>(variant)];
          worst = std::max(worst, err);
          if (!(err <= summary.tolerance)) ++summary.failures;
        }
      }
    }
  }
  return summary;
}

std::string report_to_json(const SimulationReport& report) {
  ordered_json j;
  j["completed"] = report.completed;
  j["total_cycles"] = report.total_cycles;
  j["blocked"] = ordered_json::array();
  for (const BlockedNodeReport& b : report.blocked) {
    j["blocked"].push_back({{"node", b.node_name},
                            {"state", node_state_name(b.state)},
                            {"channel", b.channel_name},
                            {"local_time", b.local_time}});
  }
  j["channels"] = ordered_json::array();
  for (const ChannelReport& ch : report.channels) {
    ordered_json depth =
        ch.depth == kInfiniteDepth ? ordered_json(nullptr) : ordered_json(ch.depth);
    j["channels"].push_back({{"name", ch.name},
                             {"depth", std::move(depth)},
                             {"latency", ch.latency},
                             {"long_role", ch.long_role},
                             {"source_fed", ch.source_fed},
                             {"enqueued", ch.stats.enqueued},
                             {"dequeued", ch.stats.dequeued},
                             {"peak_occupancy", ch.stats.peak_occupancy}});
  }
  j["sinks"] = ordered_json::array();
  for (const SinkReport& s : report.sinks) {
    ordered_json received = ordered_json::array();
    for (const auto& [value, time] : s.received) {
      received.push_back({{"value", value_to_json(value)}, {"time", time}});
    }
    j["sinks"].push_back(
        {{"node", s.node_name}, {"received", std::move(received)}});
  }
  return j.dump(2) + "\n";
}

}  // namespace dfsim
