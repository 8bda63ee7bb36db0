#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graph.hpp"

namespace dfsim {

enum class NodeState { Running, BlockedOnSend, BlockedOnReceive, Done };

const char* node_state_name(NodeState state);

struct NodeStatusView {
  NodeId id = 0;
  NodeState state = NodeState::Running;
  ChannelId blocked_channel = 0;

  friend bool operator==(const NodeStatusView&,
                         const NodeStatusView&) = default;
};

// Decides whether a set of node statuses is a deadlock. Returns the blocked
// nodes iff nothing can ever proceed: no node is runnable and at least one
// is not finished. The scheduler invokes this at quiescence, where "no node
// runnable" is equivalent to "no channel operation can ever complete"
// (execution is cooperative and nothing external wakes a node).
std::optional<std::vector<NodeStatusView>> detect_deadlock(
    std::span<const NodeStatusView> statuses);

struct BlockedNodeReport {
  NodeId node = 0;
  std::string node_name;
  NodeState state = NodeState::Running;
  ChannelId channel = 0;
  std::string channel_name;
  Cycle local_time = 0;

  friend bool operator==(const BlockedNodeReport&,
                         const BlockedNodeReport&) = default;
};

struct ChannelReport {
  ChannelId id = 0;
  std::string name;
  std::uint64_t depth = 0;  // kInfiniteDepth when unbounded
  Cycle latency = 0;
  bool long_role = false;
  bool source_fed = false;
  ChannelStats stats;

  friend bool operator==(const ChannelReport&, const ChannelReport&) = default;
};

struct SinkReport {
  NodeId node = 0;
  std::string node_name;
  std::vector<std::pair<Value, Cycle>> received;

  friend bool operator==(const SinkReport&, const SinkReport&) = default;
};

struct SimulationReport {
  bool completed = false;
  std::vector<BlockedNodeReport> blocked;  // empty when completed
  // Completion time: the latest hand-off any sink observed (0 if none).
  Cycle total_cycles = 0;
  std::vector<ChannelReport> channels;
  std::vector<SinkReport> sinks;

  friend bool operator==(const SimulationReport&,
                         const SimulationReport&) = default;
};

// Executes the graph to completion or deadlock. Results are a pure function
// of the graph: node programs advance private clocks and every hand-off time
// is derived from channel history, so no host scheduling order can leak in.
// Throws ProtocolError when a node violates stream discipline.
SimulationReport run(const GraphSpec& graph);

}  // namespace dfsim
