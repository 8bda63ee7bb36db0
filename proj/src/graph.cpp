#include "graph.hpp"

#include <unordered_set>

namespace dfsim {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Map: return "map";
    case NodeKind::Reduce: return "reduce";
    case NodeKind::MemReduce: return "mem_reduce";
    case NodeKind::Repeat: return "repeat";
    case NodeKind::Scan: return "scan";
    case NodeKind::Broadcast: return "broadcast";
    case NodeKind::Source: return "source";
    case NodeKind::Sink: return "sink";
  }
  return "?";
}

bool GraphSpec::source_fed(ChannelId id) const {
  const GraphChannel& ch = channels_[id];
  return ch.producer && nodes_[*ch.producer].kind == NodeKind::Source;
}

ChannelId GraphBuilder::channel(std::string name, ChannelConfig cfg,
                                ChannelOptions opts) {
  if (cfg.depth == 0) {
    throw ConfigError("channel '" + name + "': depth must be >= 1");
  }
  GraphChannel ch;
  ch.id = static_cast<ChannelId>(spec_.channels_.size());
  ch.name = std::move(name);
  ch.config = cfg;
  ch.long_role = opts.long_role;
  ch.declared_width = opts.declared_width;
  spec_.channels_.push_back(std::move(ch));
  return spec_.channels_.back().id;
}

NodeId GraphBuilder::add_node(std::string name, NodeKind kind,
                              NodeParams params, std::vector<ChannelId> inputs,
                              std::vector<ChannelId> outputs) {
  GraphNode node;
  node.id = static_cast<NodeId>(spec_.nodes_.size());
  node.name = std::move(name);
  node.kind = kind;
  node.params = std::move(params);
  node.inputs = std::move(inputs);
  node.outputs = std::move(outputs);

  for (ChannelId ch : node.inputs) {
    if (ch >= spec_.channels_.size()) {
      throw ConfigError("node '" + node.name + "': unknown input channel");
    }
    auto& consumer = spec_.channels_[ch].consumer;
    if (consumer) {
      throw ConfigError("channel '" + spec_.channels_[ch].name +
                        "' already has a consumer");
    }
    consumer = node.id;
  }
  for (ChannelId ch : node.outputs) {
    if (ch >= spec_.channels_.size()) {
      throw ConfigError("node '" + node.name + "': unknown output channel");
    }
    auto& producer = spec_.channels_[ch].producer;
    if (producer) {
      throw ConfigError("channel '" + spec_.channels_[ch].name +
                        "' already has a producer");
    }
    producer = node.id;
  }

  spec_.nodes_.push_back(std::move(node));
  return spec_.nodes_.back().id;
}

NodeId GraphBuilder::map(std::string name, FunctionSpec f,
                         std::vector<ChannelId> inputs, ChannelId output) {
  return add_node(std::move(name), NodeKind::Map, MapParams{std::move(f)},
                  std::move(inputs), {output});
}

NodeId GraphBuilder::reduce(std::string name, std::uint64_t group, Value init,
                            FunctionSpec f, std::vector<ChannelId> inputs,
                            ChannelId output) {
  return add_node(std::move(name), NodeKind::Reduce,
                  ReduceParams{group, std::move(init), std::move(f)},
                  std::move(inputs), {output});
}

NodeId GraphBuilder::mem_reduce(std::string name, std::uint64_t group,
                                Value init, FunctionSpec f,
                                std::vector<ChannelId> inputs,
                                ChannelId output) {
  return add_node(std::move(name), NodeKind::MemReduce,
                  ReduceParams{group, std::move(init), std::move(f)},
                  std::move(inputs), {output});
}

NodeId GraphBuilder::repeat(std::string name, std::uint64_t count,
                            ChannelId input, ChannelId output) {
  return add_node(std::move(name), NodeKind::Repeat, RepeatParams{count},
                  {input}, {output});
}

NodeId GraphBuilder::scan(std::string name, std::uint64_t group, Value init,
                          FunctionSpec update, FunctionSpec emit,
                          ChannelId input, ChannelId output) {
  return add_node(
      std::move(name), NodeKind::Scan,
      ScanParams{group, std::move(init), std::move(update), std::move(emit)},
      {input}, {output});
}

NodeId GraphBuilder::broadcast(std::string name, ChannelId input,
                               std::vector<ChannelId> outputs) {
  return add_node(std::move(name), NodeKind::Broadcast, BroadcastParams{},
                  {input}, std::move(outputs));
}

NodeId GraphBuilder::source(std::string name, std::vector<Value> data,
                            std::uint64_t cycles_through, ChannelId output) {
  return add_node(std::move(name), NodeKind::Source,
                  SourceParams{std::move(data), cycles_through}, {},
                  {output});
}

NodeId GraphBuilder::sink(std::string name, ChannelId input) {
  return add_node(std::move(name), NodeKind::Sink, SinkParams{}, {input}, {});
}

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void GraphBuilder::validate() const {
  std::unordered_set<std::string> names;
  for (const GraphChannel& ch : spec_.channels_) {
    check(names.insert("c:" + ch.name).second,
          "duplicate channel name '" + ch.name + "'");
    check(ch.producer.has_value(),
          "channel '" + ch.name + "' has no producer");
    check(ch.consumer.has_value(),
          "channel '" + ch.name + "' has no consumer");
  }
  for (const GraphNode& n : spec_.nodes_) {
    check(names.insert("n:" + n.name).second,
          "duplicate node name '" + n.name + "'");
    const std::string where = "node '" + n.name + "': ";
    switch (n.kind) {
      case NodeKind::Map: {
        const auto& p = std::get<MapParams>(n.params);
        check(!n.inputs.empty() && n.inputs.size() <= 3,
              where + "map takes 1..3 inputs");
        check(n.outputs.size() == 1, where + "map emits one stream");
        check(p.f.arity == n.inputs.size(),
              where + "function arity does not match input count");
        // Zipped vector inputs must agree on width when both declare one.
        std::optional<std::size_t> w;
        for (ChannelId ch : n.inputs) {
          auto dw = spec_.channels_[ch].declared_width;
          if (!dw || *dw == 0) continue;
          check(!w || *w == *dw, where + "vector inputs have unequal widths");
          w = dw;
        }
        break;
      }
      case NodeKind::Reduce:
      case NodeKind::MemReduce: {
        const auto& p = std::get<ReduceParams>(n.params);
        check(p.group >= 1, where + "group size must be >= 1");
        check(!n.inputs.empty() && n.inputs.size() <= 2,
              where + "reduce takes 1..2 inputs");
        check(n.outputs.size() == 1, where + "reduce emits one stream");
        check(p.f.arity == n.inputs.size() + 1,
              where + "function arity must be 1 + input count");
        break;
      }
      case NodeKind::Repeat: {
        const auto& p = std::get<RepeatParams>(n.params);
        check(p.count >= 1, where + "repeat count must be >= 1");
        check(n.inputs.size() == 1 && n.outputs.size() == 1,
              where + "repeat is single input, single output");
        break;
      }
      case NodeKind::Scan: {
        const auto& p = std::get<ScanParams>(n.params);
        check(p.group >= 1, where + "group size must be >= 1");
        check(n.inputs.size() == 1 && n.outputs.size() == 1,
              where + "scan is single input, single output");
        check(p.update.arity == 2, where + "update function takes (state, x)");
        check(p.emit.arity == 3,
              where + "emit function takes (old, new, x)");
        break;
      }
      case NodeKind::Broadcast:
        check(n.inputs.size() == 1, where + "broadcast takes one input");
        check(n.outputs.size() >= 2,
              where + "broadcast needs at least two outputs");
        break;
      case NodeKind::Source: {
        const auto& p = std::get<SourceParams>(n.params);
        check(n.inputs.empty() && n.outputs.size() == 1,
              where + "source has outputs only");
        check(p.cycles_through == 0 || !p.data.empty(),
              where + "data must be nonempty when cycles_through >= 1");
        break;
      }
      case NodeKind::Sink:
        check(n.inputs.size() == 1 && n.outputs.empty(),
              where + "sink has one input and no outputs");
        break;
    }
  }
}

GraphSpec GraphBuilder::build() && {
  validate();
  return std::move(spec_);
}

}  // namespace dfsim
