#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "channel.hpp"
#include "value.hpp"

namespace dfsim {

enum class NodeKind {
  Map,        // per-element function over zipped inputs
  Reduce,     // folds groups of `group` elements, emits the accumulator
  MemReduce,  // Reduce whose accumulator is a vector
  Repeat,     // emits each input element `count` times
  Scan,       // stateful per-element emit with periodic state reset
  Broadcast,  // copies each element to every output
  Source,     // feeds a fixed sequence into the graph
  Sink        // records everything it receives
};

const char* node_kind_name(NodeKind kind);

// An opaque n-ary function over values. `arity` is validated against the
// node's wiring when the graph is built.
struct FunctionSpec {
  std::size_t arity = 1;
  std::function<Value(std::span<const Value>)> body;

  Value operator()(std::span<const Value> args) const { return body(args); }
};

struct MapParams {
  FunctionSpec f;  // arity = number of input channels
};
struct ReduceParams {           // shared by Reduce and MemReduce
  std::uint64_t group = 1;      // elements folded per emission
  Value init;                   // accumulator start value, restored per group
  FunctionSpec f;               // f(acc, x...) -> acc, arity = 1 + inputs
};
struct RepeatParams {
  std::uint64_t count = 1;
};
struct ScanParams {
  std::uint64_t group = 1;  // state resets after this many elements
  Value init;
  FunctionSpec update;  // update(state, x) -> state
  FunctionSpec emit;    // emit(old_state, new_state, x) -> output
};
struct BroadcastParams {};
struct SourceParams {
  std::vector<Value> data;
  std::uint64_t cycles_through = 1;  // how many times the sequence repeats
};
struct SinkParams {};

using NodeParams =
    std::variant<MapParams, ReduceParams, RepeatParams, ScanParams,
                 BroadcastParams, SourceParams, SinkParams>;

struct GraphNode {
  NodeId id = 0;
  std::string name;
  NodeKind kind = NodeKind::Map;
  NodeParams params;
  std::vector<ChannelId> inputs;
  std::vector<ChannelId> outputs;
  Cycle initiation_interval = 1;  // min cycles between consecutive firings
};

struct GraphChannel {
  ChannelId id = 0;
  std::string name;
  ChannelConfig config;
  // Marked by pipeline builders on channels sized by long_depth; lets
  // reports single out "the long FIFO" independent of the depth policy.
  bool long_role = false;
  // Declared element width for build-time validation (nullopt = undeclared,
  // 0 = scalar/pair, >0 = vector of that width).
  std::optional<std::size_t> declared_width;
  std::optional<NodeId> producer;
  std::optional<NodeId> consumer;
};

// An immutable wiring of pattern-node instances. Construction via
// GraphBuilder::build() implies the graph passed validation.
class GraphSpec {
 public:
  std::span<const GraphNode> nodes() const { return nodes_; }
  std::span<const GraphChannel> channels() const { return channels_; }
  const GraphNode& node(NodeId id) const { return nodes_[id]; }
  const GraphChannel& channel(ChannelId id) const { return channels_[id]; }

  // True when the channel is fed directly by a Source node, i.e. it stages
  // graph input rather than intermediate data.
  bool source_fed(ChannelId id) const;

 private:
  friend class GraphBuilder;
  std::vector<GraphNode> nodes_;
  std::vector<GraphChannel> channels_;
};

struct ChannelOptions {
  bool long_role = false;
  std::optional<std::size_t> declared_width;
};

class GraphBuilder {
 public:
  ChannelId channel(std::string name, ChannelConfig cfg,
                    ChannelOptions opts = {});

  NodeId map(std::string name, FunctionSpec f, std::vector<ChannelId> inputs,
             ChannelId output);
  NodeId reduce(std::string name, std::uint64_t group, Value init,
                FunctionSpec f, std::vector<ChannelId> inputs,
                ChannelId output);
  NodeId mem_reduce(std::string name, std::uint64_t group, Value init,
                    FunctionSpec f, std::vector<ChannelId> inputs,
                    ChannelId output);
  NodeId repeat(std::string name, std::uint64_t count, ChannelId input,
                ChannelId output);
  NodeId scan(std::string name, std::uint64_t group, Value init,
              FunctionSpec update, FunctionSpec emit, ChannelId input,
              ChannelId output);
  NodeId broadcast(std::string name, ChannelId input,
                   std::vector<ChannelId> outputs);
  NodeId source(std::string name, std::vector<Value> data,
                std::uint64_t cycles_through, ChannelId output);
  NodeId sink(std::string name, ChannelId input);

  // Validates wiring and returns the finished graph. Throws ConfigError.
  GraphSpec build() &&;

 private:
  NodeId add_node(std::string name, NodeKind kind, NodeParams params,
                  std::vector<ChannelId> inputs,
                  std::vector<ChannelId> outputs);
  void validate() const;

  GraphSpec spec_;
};

}  // namespace dfsim
