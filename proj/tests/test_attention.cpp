#include "doctest.h"

#include <cmath>
#include <limits>

#include "attention.hpp"
#include "experiment.hpp"

using namespace dfsim;

namespace {

Matrix from_rows(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m.at(i, j) = rows[i][j];
    }
  }
  return m;
}

struct Shape {
  std::size_t nodes;
  std::size_t channels;
  std::size_t long_channels;
};

Shape shape_of(const GraphSpec& spec) {
  Shape s{spec.nodes().size(), spec.channels().size(), 0};
  for (const auto& ch : spec.channels()) {
    if (ch.long_role) ++s.long_channels;
  }
  return s;
}

}  // namespace

TEST_CASE("reference: one row attends only to itself") {
  AttentionProblem p(from_rows({{2.0, -1.0}}), from_rows({{0.5, 0.25}}),
                     from_rows({{3.0, 7.0}}));
  Matrix o = oracle_attention(p, /*subtract_max=*/true, false);
  // Single softmax weight is exp(0)/exp(0) = 1 exactly.
  CHECK(o == p.v);
}

TEST_CASE("reference: zero keys give uniform weights") {
  Matrix q = from_rows({{1, 2}, {3, 4}});
  Matrix k = from_rows({{0, 0}, {0, 0}});
  Matrix v = from_rows({{1, 5}, {3, 9}});
  AttentionProblem p(q, k, v);
  Matrix o = oracle_attention(p, true, false);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(o.at(i, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(o.at(i, 1) == doctest::Approx(7.0).epsilon(1e-12));
  }
}

TEST_CASE("reference: max subtraction changes conditioning, not the result") {
  auto p = generate_inputs(5, 6, 3);
  Matrix a = oracle_attention(p, true, false);
  Matrix b = oracle_attention(p, false, false);
  CHECK(max_relative_error(a, b) < 1e-12);
}

TEST_CASE("reference: score scaling by sqrt(1) is the identity") {
  auto p = generate_inputs(6, 4, 1);
  CHECK(oracle_attention(p, true, true) == oracle_attention(p, true, false));
}

TEST_CASE("problems must be finite and consistently shaped") {
  Matrix good = from_rows({{1, 2}, {3, 4}});
  Matrix bad_shape = from_rows({{1, 2}});
  Matrix bad_value = from_rows({{1, 2}, {std::nan(""), 4}});
  CHECK_NOTHROW(AttentionProblem(good, good, good));
  CHECK_THROWS_AS(AttentionProblem(good, bad_shape, good), ConfigError);
  CHECK_THROWS_AS(AttentionProblem(good, good, bad_value), ConfigError);
}

TEST_CASE("pipeline shapes: how many stages, how many deep FIFOs") {
  auto p = generate_inputs(1, 4, 2);
  DepthPolicy pol;

  auto naive = shape_of(build_naive(p, pol));
  CHECK(naive.nodes == 12);
  CHECK(naive.channels == 12);
  CHECK(naive.long_channels == 1);

  auto scaled = shape_of(build_scaled(p, pol));
  CHECK(scaled.nodes == 15);
  CHECK(scaled.channels == 16);
  CHECK(scaled.long_channels == 2);

  auto reordered = shape_of(build_reordered(p, pol));
  CHECK(reordered.nodes == 14);
  CHECK(reordered.channels == 15);
  CHECK(reordered.long_channels == 1);

  auto memfree = shape_of(build_memfree(p, pol));
  CHECK(memfree.nodes == 11);
  CHECK(memfree.channels == 11);
  CHECK(memfree.long_channels == 0);
}

TEST_CASE("long FIFOs take the long depth, everything else the short one") {
  auto p = generate_inputs(1, 8, 2);
  auto spec = build_reordered(p, DepthPolicy{});
  for (const auto& ch : spec.channels()) {
    CHECK(ch.config.depth == (ch.long_role ? 10 : 2));
  }
  auto base = build_reordered(p, DepthPolicy{.long_depth = {}, .baseline = true});
  for (const auto& ch : base.channels()) {
    CHECK(ch.config.depth == kInfiniteDepth);
  }
}

TEST_CASE("every pipeline reproduces the reference output") {
  auto p = generate_inputs(3, 4, 2);
  Matrix want = oracle_attention(p, true, false);
  for (Variant variant : {Variant::Naive, Variant::Scaled, Variant::Reordered,
                          Variant::MemFree}) {
    CAPTURE(variant_name(variant));
    auto result = run_variant(p, variant, DepthPolicy{});
    REQUIRE(result.output.has_value());
    CHECK(max_relative_error(*result.output, want) <= 1e-9);
  }
}

TEST_CASE("an undersized long FIFO deadlocks the naive pipeline") {
  auto p = generate_inputs(1, 8, 4);
  auto result = run_variant(p, Variant::Naive,
                            DepthPolicy{.long_depth = 2});
  CHECK_FALSE(result.report.completed);
  CHECK_FALSE(result.output.has_value());
  bool found = false;
  for (const auto& b : result.report.blocked) {
    if (b.node_name == "split_exp") {
      found = true;
      CHECK(b.state == NodeState::BlockedOnSend);
      CHECK(b.channel_name == "exp_long");
    }
  }
  CHECK(found);
}

TEST_CASE("FIFO sizing affects cycles, never the numbers") {
  auto p = generate_inputs(7, 6, 3);
  for (Variant variant : {Variant::Naive, Variant::MemFree}) {
    CAPTURE(variant_name(variant));
    auto tight = run_variant(p, variant, DepthPolicy{});
    auto roomy =
        run_variant(p, variant, DepthPolicy{.short_depth = 7, .long_depth = {}});
    auto unbounded =
        run_variant(p, variant, DepthPolicy{.long_depth = {}, .baseline = true});
    REQUIRE(tight.output.has_value());
    CHECK(*tight.output == *roomy.output);
    CHECK(*tight.output == *unbounded.output);
  }
}

TEST_CASE("the scan-based pipeline runs on single-slot FIFOs") {
  auto p = generate_inputs(2, 8, 4);
  auto result = run_variant(p, Variant::MemFree,
                            DepthPolicy{.short_depth = 1, .long_depth = 1});
  REQUIRE(result.report.completed);
  CHECK(max_relative_error(*result.output, oracle_attention(p, true, false)) <=
        1e-9);
  for (const auto& ch : result.report.channels) {
    CHECK(ch.stats.peak_occupancy <= 1);
  }
}

TEST_CASE("error metric is relative to the largest reference entry") {
  Matrix a = from_rows({{1, 2}, {3, 4}});
  CHECK(max_relative_error(a, a) == 0.0);
  Matrix b = a;
  b.at(1, 1) = 4.5;  // |diff| 0.5, largest reference entry 4
  CHECK(max_relative_error(b, a) == doctest::Approx(0.125));
  Matrix zero(2, 2);
  CHECK(std::isinf(max_relative_error(a, zero)));
  CHECK(max_relative_error(zero, zero) == 0.0);
}

TEST_CASE("variant names round-trip") {
  for (Variant variant : {Variant::Naive, Variant::Scaled, Variant::Reordered,
                          Variant::MemFree}) {
    auto back = variant_from_name(variant_name(variant));
    REQUIRE(back.has_value());
    CHECK(*back == variant);
  }
  CHECK_FALSE(variant_from_name("bogus").has_value());
}
