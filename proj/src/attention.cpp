#include "attention.hpp"

#include <cmath>
#include <limits>

namespace dfsim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_finite(const Matrix& m, const char* which) {
  for (double x : m.data) {
    if (!std::isfinite(x)) {
      throw ConfigError(std::string("matrix ") + which +
                        " has a non-finite entry");
    }
  }
}

std::vector<Value> matrix_rows(const Matrix& m) {
  std::vector<Value> rows;
  rows.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    rows.push_back(Value::vector({r.begin(), r.end()}));
  }
  return rows;
}

// --- node functions shared by the pipeline builders ---

FunctionSpec dot_fn(bool scale_scores, std::size_t d) {
  const double factor = scale_scores ? 1.0 / std::sqrt(double(d)) : 1.0;
  return {2, [factor](std::span<const Value> a) {
            auto q = a[0].as_vector();
            auto k = a[1].as_vector();
            double s = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * k[i];
            return Value::scalar(s * factor);
          }};
}

FunctionSpec exp_fn() {
  return {1, [](std::span<const Value> a) {
            return Value::scalar(std::exp(a[0].as_scalar()));
          }};
}

FunctionSpec sub_exp_fn() {  // (score, row_max) -> exp(score - row_max)
  return {2, [](std::span<const Value> a) {
            return Value::scalar(
                std::exp(a[0].as_scalar() - a[1].as_scalar()));
          }};
}

FunctionSpec scalar_div_fn() {
  return {2, [](std::span<const Value> a) {
            return Value::scalar(a[0].as_scalar() / a[1].as_scalar());
          }};
}

FunctionSpec vector_div_fn() {  // (vector, scalar) -> vector / scalar
  return {2, [](std::span<const Value> a) {
            auto num = a[0].as_vector();
            const double den = a[1].as_scalar();
            std::vector<double> out(num.begin(), num.end());
            for (double& x : out) x /= den;
            return Value::vector(std::move(out));
          }};
}

FunctionSpec add_fn() {
  return {2, [](std::span<const Value> a) {
            return Value::scalar(a[0].as_scalar() + a[1].as_scalar());
          }};
}

FunctionSpec max_fn() {
  return {2, [](std::span<const Value> a) {
            return Value::scalar(
                std::max(a[0].as_scalar(), a[1].as_scalar()));
          }};
}

// (acc, weight, v) -> acc + weight * v
FunctionSpec weighted_sum_fn() {
  return {3, [](std::span<const Value> a) {
            auto acc = a[0].as_vector();
            const double w = a[1].as_scalar();
            auto v = a[2].as_vector();
            std::vector<double> out(acc.begin(), acc.end());
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * v[i];
            return Value::vector(std::move(out));
          }};
}

// Running-max rescaling, pair = (rescale, weight):
//   rescale = exp(old_max - new_max), weight = exp(score - new_max)
FunctionSpec rescale_emit_fn() {
  return {3, [](std::span<const Value> a) {
            const double old_max = a[0].as_scalar();
            const double new_max = a[1].as_scalar();
            const double score = a[2].as_scalar();
            return Value::pair(std::exp(old_max - new_max),
                               std::exp(score - new_max));
          }};
}

// (acc, (rescale, weight)) -> acc * rescale + weight
FunctionSpec rescale_sum_fn() {
  return {2, [](std::span<const Value> a) {
            auto [rescale, weight] = a[1].as_pair();
            return Value::scalar(a[0].as_scalar() * rescale + weight);
          }};
}

// (acc, (rescale, weight), v) -> acc * rescale + weight * v
FunctionSpec rescale_weighted_fn() {
  return {3, [](std::span<const Value> a) {
            auto acc = a[0].as_vector();
            auto [rescale, weight] = a[1].as_pair();
            auto v = a[2].as_vector();
            std::vector<double> out(acc.begin(), acc.end());
            for (std::size_t i = 0; i < out.size(); ++i) {
              out[i] = out[i] * rescale + weight * v[i];
            }
            return Value::vector(std::move(out));
          }};
}

Value zero_vector(std::size_t d) {
  return Value::vector(std::vector<double>(d, 0.0));
}

ChannelConfig short_cfg(const DepthPolicy& pol) {
  return {pol.baseline ? kInfiniteDepth : pol.short_depth, 1};
}

ChannelConfig long_cfg(const DepthPolicy& pol, std::size_t n) {
  return {pol.baseline ? kInfiniteDepth : pol.long_depth_for(n), 1};
}

// Shared front end: stream every q row n times, k rows cycling n times,
// dot them into a row-major score stream.
struct ScoreStage {
  ChannelId scores;
};

ScoreStage build_score_stage(GraphBuilder& g, const AttentionProblem& p,
                             const DepthPolicy& pol, bool scale_scores) {
  const auto n = static_cast<std::uint64_t>(p.n);
  ChannelId q = g.channel("q", short_cfg(pol), {.declared_width = p.d});
  ChannelId q_rep =
      g.channel("q_rep", short_cfg(pol), {.declared_width = p.d});
  ChannelId k = g.channel("k", short_cfg(pol), {.declared_width = p.d});
  ChannelId scores = g.channel("scores", short_cfg(pol));
  g.source("src_q", matrix_rows(p.q), 1, q);
  g.repeat("repeat_q", n, q, q_rep);
  g.source("src_k", matrix_rows(p.k), n, k);
  g.map("dot", dot_fn(scale_scores, p.d), {q_rep, k}, scores);
  return {scores};
}

// Weighted accumulation over v rows: out_i = sum_j weight_ij * v_j.
ChannelId build_weighted_stage(GraphBuilder& g, const AttentionProblem& p,
                               const DepthPolicy& pol, ChannelId weights,
                               FunctionSpec f, const char* out_name) {
  const auto n = static_cast<std::uint64_t>(p.n);
  ChannelId v = g.channel("v", short_cfg(pol), {.declared_width = p.d});
  ChannelId out =
      g.channel(out_name, short_cfg(pol), {.declared_width = p.d});
  g.source("src_v", matrix_rows(p.v), n, v);
  g.mem_reduce("weighted_sum", n, zero_vector(p.d), std::move(f),
               {weights, v}, out);
  return out;
}

// Row max stage used by the scaled and reordered pipelines: splits scores
// into a result path (sized by the long depth in the scaled/reordered
// layouts) and a reduction path, subtracts the row max, exponentiates.
ChannelId build_max_subtract_stage(GraphBuilder& g, const AttentionProblem& p,
                                   const DepthPolicy& pol, ChannelId scores) {
  const auto n = static_cast<std::uint64_t>(p.n);
  ChannelId scores_long =
      g.channel("scores_long", long_cfg(pol, p.n), {.long_role = true, .declared_width = {}});
  ChannelId scores_to_max = g.channel("scores_to_max", short_cfg(pol));
  ChannelId row_max = g.channel("row_max", short_cfg(pol));
  ChannelId row_max_rep = g.channel("row_max_rep", short_cfg(pol));
  ChannelId exp_scores = g.channel("exp_scores", short_cfg(pol));
  g.broadcast("split_scores", scores, {scores_long, scores_to_max});
  g.reduce("max", n, Value::scalar(kNegInf), max_fn(), {scores_to_max},
           row_max);
  g.repeat("repeat_max", n, row_max, row_max_rep);
  g.map("sub_exp", sub_exp_fn(), {scores_long, row_max_rep}, exp_scores);
  return exp_scores;
}

}  // namespace

AttentionProblem::AttentionProblem(Matrix q_in, Matrix k_in, Matrix v_in)
    : n(q_in.rows), d(q_in.cols), q(std::move(q_in)), k(std::move(k_in)),
      v(std::move(v_in)) {
  if (n == 0 || d == 0) throw ConfigError("n and d must be >= 1");
  if (k.rows != n || k.cols != d || v.rows != n || v.cols != d) {
    throw ConfigError("q, k and v must all be n x d");
  }
  require_finite(q, "q");
  require_finite(k, "k");
  require_finite(v, "v");
}

Matrix oracle_attention(const AttentionProblem& p, bool subtract_max,
                        bool scale_scores) {
  const double factor = scale_scores ? 1.0 / std::sqrt(double(p.d)) : 1.0;
  Matrix out(p.n, p.d);
  std::vector<double> weights(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < p.n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < p.d; ++c) s += p.q.at(i, c) * p.k.at(j, c);
      weights[j] = s * factor;
    }
    double shift = 0.0;
    if (subtract_max) {
      shift = kNegInf;
      for (double s : weights) shift = std::max(shift, s);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < p.n; ++j) {
      weights[j] = std::exp(weights[j] - shift);
      total += weights[j];
    }
    for (std::size_t j = 0; j < p.n; ++j) {
      const double prob = weights[j] / total;
      for (std::size_t c = 0; c < p.d; ++c) {
        out.at(i, c) += prob * p.v.at(j, c);
      }
    }
  }
  return out;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Naive: return "naive";
    case Variant::Scaled: return "scaled";
    case Variant::Reordered: return "reordered";
    case Variant::MemFree: return "memfree";
  }
  return "?";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  if (name == "naive") return Variant::Naive;
  if (name == "scaled") return Variant::Scaled;
  if (name == "reordered") return Variant::Reordered;
  if (name == "memfree") return Variant::MemFree;
  return std::nullopt;
}

// exp -> (long FIFO || sum) -> normalize -> weighted sum. The full row of
// exponentials waits in the long FIFO while the row sum comes together, so
// full throughput needs its depth to grow with n.
GraphSpec build_naive(const AttentionProblem& p, const DepthPolicy& pol,
                      bool scale_scores) {
  const auto n = static_cast<std::uint64_t>(p.n);
  GraphBuilder g;
  auto [scores] = build_score_stage(g, p, pol, scale_scores);

  ChannelId exp_scores = g.channel("exp_scores", short_cfg(pol));
  ChannelId exp_long =
      g.channel("exp_long", long_cfg(pol, p.n), {.long_role = true, .declared_width = {}});
  ChannelId exp_to_sum = g.channel("exp_to_sum", short_cfg(pol));
  ChannelId row_sum = g.channel("row_sum", short_cfg(pol));
  ChannelId row_sum_rep = g.channel("row_sum_rep", short_cfg(pol));
  ChannelId probs = g.channel("probs", short_cfg(pol));

  g.map("exp", exp_fn(), {scores}, exp_scores);
  g.broadcast("split_exp", exp_scores, {exp_long, exp_to_sum});
  g.reduce("sum", n, Value::scalar(0.0), add_fn(), {exp_to_sum}, row_sum);
  g.repeat("repeat_sum", n, row_sum, row_sum_rep);
  g.map("div", scalar_div_fn(), {exp_long, row_sum_rep}, probs);

  ChannelId out =
      build_weighted_stage(g, p, pol, probs, weighted_sum_fn(), "out");
  g.sink("sink_o", out);
  return std::move(g).build();
}

// Numerically safe softmax with two divergent path pairs: scores wait for
// the row max, then exponentials wait for the row sum. Two long FIFOs.
GraphSpec build_scaled(const AttentionProblem& p, const DepthPolicy& pol,
                       bool scale_scores) {
  const auto n = static_cast<std::uint64_t>(p.n);
  GraphBuilder g;
  auto [scores] = build_score_stage(g, p, pol, scale_scores);
  ChannelId exp_scores = build_max_subtract_stage(g, p, pol, scores);

  ChannelId exp_long =
      g.channel("exp_long", long_cfg(pol, p.n), {.long_role = true, .declared_width = {}});
  ChannelId exp_to_sum = g.channel("exp_to_sum", short_cfg(pol));
  ChannelId row_sum = g.channel("row_sum", short_cfg(pol));
  ChannelId row_sum_rep = g.channel("row_sum_rep", short_cfg(pol));
  ChannelId probs = g.channel("probs", short_cfg(pol));

  g.broadcast("split_exp", exp_scores, {exp_long, exp_to_sum});
  g.reduce("sum", n, Value::scalar(0.0), add_fn(), {exp_to_sum}, row_sum);
  g.repeat("repeat_sum", n, row_sum, row_sum_rep);
  g.map("div", scalar_div_fn(), {exp_long, row_sum_rep}, probs);

  ChannelId out =
      build_weighted_stage(g, p, pol, probs, weighted_sum_fn(), "out");
  g.sink("sink_o", out);
  return std::move(g).build();
}

// Division moved after both reductions: the row sum and the weighted sum
// accumulate in parallel from the same exponential stream, so only the
// scores-vs-max FIFO still has to cover a full row.
GraphSpec build_reordered(const AttentionProblem& p, const DepthPolicy& pol,
                          bool scale_scores) {
  const auto n = static_cast<std::uint64_t>(p.n);
  GraphBuilder g;
  auto [scores] = build_score_stage(g, p, pol, scale_scores);
  ChannelId exp_scores = build_max_subtract_stage(g, p, pol, scores);

  ChannelId exp_to_sum = g.channel("exp_to_sum", short_cfg(pol));
  ChannelId exp_to_weighted = g.channel("exp_to_weighted", short_cfg(pol));
  ChannelId row_sum = g.channel("row_sum", short_cfg(pol));

  g.broadcast("split_exp", exp_scores, {exp_to_sum, exp_to_weighted});
  g.reduce("sum", n, Value::scalar(0.0), add_fn(), {exp_to_sum}, row_sum);

  ChannelId weighted = build_weighted_stage(g, p, pol, exp_to_weighted,
                                            weighted_sum_fn(), "weighted");
  ChannelId out = g.channel("out", short_cfg(pol), {.declared_width = p.d});
  g.map("div", vector_div_fn(), {weighted, row_sum}, out);
  g.sink("sink_o", out);
  return std::move(g).build();
}

// Online softmax: a scan tracks the running row max and emits per-element
// (rescale, weight) pairs; both reductions rescale their accumulators on
// the fly. No path ever waits for a whole row, so every FIFO stays short.
GraphSpec build_memfree(const AttentionProblem& p, const DepthPolicy& pol,
                        bool scale_scores) {
  const auto n = static_cast<std::uint64_t>(p.n);
  GraphBuilder g;
  auto [scores] = build_score_stage(g, p, pol, scale_scores);

  ChannelId rescales = g.channel("rescales", short_cfg(pol));
  ChannelId rescales_to_sum = g.channel("rescales_to_sum", short_cfg(pol));
  ChannelId rescales_to_weighted =
      g.channel("rescales_to_weighted", short_cfg(pol));
  ChannelId row_sum = g.channel("row_sum", short_cfg(pol));

  g.scan("online_max", n, Value::scalar(kNegInf), max_fn(),
         rescale_emit_fn(), scores, rescales);
  g.broadcast("split_rescale", rescales,
              {rescales_to_sum, rescales_to_weighted});
  g.reduce("sum", n, Value::scalar(0.0), rescale_sum_fn(), {rescales_to_sum},
           row_sum);

  ChannelId weighted = build_weighted_stage(g, p, pol, rescales_to_weighted,
                                            rescale_weighted_fn(), "weighted");
  ChannelId out = g.channel("out", short_cfg(pol), {.declared_width = p.d});
  g.map("div", vector_div_fn(), {weighted, row_sum}, out);
  g.sink("sink_o", out);
  return std::move(g).build();
}

GraphSpec build_variant(Variant variant, const AttentionProblem& p,
                        const DepthPolicy& policy, bool scale_scores) {
  switch (variant) {
    case Variant::Naive: return build_naive(p, policy, scale_scores);
    case Variant::Scaled: return build_scaled(p, policy, scale_scores);
    case Variant::Reordered: return build_reordered(p, policy, scale_scores);
    case Variant::MemFree: return build_memfree(p, policy, scale_scores);
  }
  throw ConfigError("unknown variant");
}

VariantResult run_variant(const AttentionProblem& p, Variant variant,
                          const DepthPolicy& policy, bool scale_scores) {
  GraphSpec graph = build_variant(variant, p, policy, scale_scores);
  VariantResult result{run(graph), std::nullopt};
  if (!result.report.completed) return result;

  const auto& received = result.report.sinks.at(0).received;
  if (received.size() != p.n) {
    throw ProtocolError("pipeline produced " +
                        std::to_string(received.size()) + " rows, expected " +
                        std::to_string(p.n));
  }
  Matrix out(p.n, p.d);
  for (std::size_t i = 0; i < p.n; ++i) {
    auto row = received[i].first.as_vector();
    for (std::size_t c = 0; c < p.d; ++c) out.at(i, c) = row[c];
  }
  result.output = std::move(out);
  return result;
}

double max_relative_error(const Matrix& actual, const Matrix& reference) {
  double scale = 0.0;
  for (double x : reference.data) scale = std::max(scale, std::abs(x));
  double worst = 0.0;
  for (std::size_t i = 0; i < reference.data.size(); ++i) {
    worst = std::max(worst, std::abs(actual.data[i] - reference.data[i]));
  }
  if (scale == 0.0) {
    return worst == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return worst / scale;
}

}  // namespace dfsim
