#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graph.hpp"
#include "runtime.hpp"

namespace dfsim {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// One attention instance: n query/key/value rows of width d. All entries
// must be finite.
struct AttentionProblem {
  std::size_t n = 0;
  std::size_t d = 0;
  Matrix q, k, v;  // each n x d

  AttentionProblem(Matrix q_in, Matrix k_in, Matrix v_in);
};

// Dense row-at-a-time reference: softmax(Q Kt) V. With subtract_max the
// exponentials are shifted by the row maximum first (same result, better
// conditioning). scale_scores divides scores by sqrt(d).
Matrix oracle_attention(const AttentionProblem& p, bool subtract_max,
                        bool scale_scores);

enum class Variant { Naive, Scaled, Reordered, MemFree };

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

// FIFO sizing for a pipeline build. Channels on result-recirculation paths
// (the ones a builder marks long_role) get long_depth, everything else gets
// short_depth. baseline overrides both with unbounded depth, the
// peak-throughput reference configuration.
struct DepthPolicy {
  std::uint64_t short_depth = 2;
  std::optional<std::uint64_t> long_depth;  // default: n + 2
  bool baseline = false;

  std::uint64_t long_depth_for(std::size_t n) const {
    return long_depth.value_or(static_cast<std::uint64_t>(n) + 2);
  }
};

// Pipeline builders. Streams flow row-major (row i outer, column j inner);
// every channel has latency 1 and every node initiation interval 1.
GraphSpec build_naive(const AttentionProblem& p, const DepthPolicy& policy,
                      bool scale_scores = false);
GraphSpec build_scaled(const AttentionProblem& p, const DepthPolicy& policy,
                       bool scale_scores = false);
GraphSpec build_reordered(const AttentionProblem& p, const DepthPolicy& policy,
                          bool scale_scores = false);
GraphSpec build_memfree(const AttentionProblem& p, const DepthPolicy& policy,
                        bool scale_scores = false);

GraphSpec build_variant(Variant variant, const AttentionProblem& p,
                        const DepthPolicy& policy, bool scale_scores = false);

struct VariantResult {
  SimulationReport report;
  std::optional<Matrix> output;  // present iff the run completed
};

VariantResult run_variant(const AttentionProblem& p, Variant variant,
                          const DepthPolicy& policy, bool scale_scores = false);

// max |a - b| normalized by the largest-magnitude entry of `reference`.
double max_relative_error(const Matrix& actual, const Matrix& reference);

}  // namespace dfsim
