#include "doctest.h"

#include <vector>

#include "experiment.hpp"
#include "graph.hpp"
#include "runtime.hpp"

using namespace dfsim;

namespace {

Value sv(double x) { return Value::scalar(x); }

FunctionSpec identity() {
  return {1, [](std::span<const Value> a) { return a[0]; }};
}

const ChannelConfig kUnbounded{.depth = kInfiniteDepth, .latency = 1};

}  // namespace

TEST_CASE("source through identity map to sink, element-by-element timing") {
  GraphBuilder g;
  auto a = g.channel("a", kUnbounded);
  auto b = g.channel("b", kUnbounded);
  g.source("src", {sv(10), sv(11), sv(12), sv(13)}, 1, a);
  g.map("id", identity(), {a}, b);
  g.sink("snk", b);
  auto report = run(std::move(g).build());

  CHECK(report.completed);
  CHECK(report.blocked.empty());
  REQUIRE(report.sinks.size() == 1);
  const auto& received = report.sinks[0].received;
  REQUIRE(received.size() == 4);
  // Element i leaves the source at cycle i and crosses two latency-1 hops
  // through a map that fires back-to-back: hand-off at the sink is i + 2.
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(received[i].first == sv(10.0 + double(i)));
    CHECK(received[i].second == i + 2);
  }
  CHECK(report.total_cycles == 5);

  // Input staging channel is flagged, the intermediate one is not.
  CHECK(report.channels[a].source_fed);
  CHECK_FALSE(report.channels[b].source_fed);
}

TEST_CASE("a node waiting on itself deadlocks the pipeline") {
  GraphBuilder g;
  auto a = g.channel("a", {.depth = 1, .latency = 1});
  auto loop = g.channel("loop", {.depth = 1, .latency = 1});
  g.source("src", {sv(1), sv(2), sv(3)}, 1, a);
  // First input is the node's own output: the first receive never
  // completes, so channel `a` is never drained.
  g.map("stuck", {2, [](std::span<const Value> v) { return v[0]; }},
        {loop, a}, loop);
  auto report = run(std::move(g).build());

  CHECK_FALSE(report.completed);
  REQUIRE(report.blocked.size() == 2);
  CHECK(report.blocked[0].node_name == "src");
  CHECK(report.blocked[0].state == NodeState::BlockedOnSend);
  CHECK(report.blocked[0].channel_name == "a");
  CHECK(report.blocked[1].node_name == "stuck");
  CHECK(report.blocked[1].state == NodeState::BlockedOnReceive);
  CHECK(report.blocked[1].channel_name == "loop");
}

TEST_CASE("deadlock detection is quiescence plus unfinished work") {
  using V = NodeStatusView;
  SUBCASE("all done means clean completion") {
    std::vector<V> s = {{0, NodeState::Done, 0}, {1, NodeState::Done, 0}};
    CHECK_FALSE(detect_deadlock(s).has_value());
  }
  SUBCASE("a runnable node means no verdict yet") {
    std::vector<V> s = {{0, NodeState::Running, 0},
                        {1, NodeState::BlockedOnSend, 3}};
    CHECK_FALSE(detect_deadlock(s).has_value());
  }
  SUBCASE("only blocked and done nodes means deadlock") {
    std::vector<V> s = {{0, NodeState::Done, 0},
                        {1, NodeState::BlockedOnSend, 2},
                        {2, NodeState::BlockedOnReceive, 5}};
    auto blocked = detect_deadlock(s);
    REQUIRE(blocked.has_value());
    REQUIRE(blocked->size() == 2);
    CHECK((*blocked)[0] == V{1, NodeState::BlockedOnSend, 2});
    CHECK((*blocked)[1] == V{2, NodeState::BlockedOnReceive, 5});
  }
  SUBCASE("nothing to run and nothing unfinished is not a deadlock") {
    CHECK_FALSE(detect_deadlock({}).has_value());
  }
}

TEST_CASE("an empty graph completes at cycle zero") {
  auto report = run(GraphBuilder().build());
  CHECK(report.completed);
  CHECK(report.total_cycles == 0);
  CHECK(report.sinks.empty());
}

TEST_CASE("identical graphs give identical reports, bytes included") {
  auto make = [] {
    GraphBuilder g;
    auto a = g.channel("a", {.depth = 2, .latency = 1});
    auto b = g.channel("b", {.depth = 3, .latency = 2});
    g.source("src", {sv(1), sv(2), sv(3), sv(4), sv(5)}, 2, a);
    g.map("twice", {1,
                    [](std::span<const Value> v) {
                      return sv(v[0].as_scalar() * 2);
                    }},
          {a}, b);
    g.sink("snk", b);
    return std::move(g).build();
  };
  auto r1 = run(make());
  auto r2 = run(make());
  CHECK(r1 == r2);
  CHECK(report_to_json(r1) == report_to_json(r2));
}

TEST_CASE("a stream ending inside a reduction group is a protocol error") {
  GraphBuilder g;
  auto a = g.channel("a", kUnbounded);
  auto b = g.channel("b", kUnbounded);
  g.source("src", {sv(1), sv(2), sv(3)}, 1, a);
  g.reduce("sum", 2, sv(0),
           {2,
            [](std::span<const Value> v) {
              return sv(v[0].as_scalar() + v[1].as_scalar());
            }},
           {a}, b);
  g.sink("snk", b);
  CHECK_THROWS_AS(run(std::move(g).build()), ProtocolError);
}

TEST_CASE("zipped inputs of unequal length are a protocol error") {
  GraphBuilder g;
  auto a = g.channel("a", kUnbounded);
  auto b = g.channel("b", kUnbounded);
  auto c = g.channel("c", kUnbounded);
  g.source("s1", {sv(1), sv(2)}, 1, a);
  g.source("s2", {sv(1), sv(2), sv(3)}, 1, b);
  g.map("add", {2,
                [](std::span<const Value> v) {
                  return sv(v[0].as_scalar() + v[1].as_scalar());
                }},
        {a, b}, c);
  g.sink("snk", c);
  CHECK_THROWS_AS(run(std::move(g).build()), ProtocolError);
}
