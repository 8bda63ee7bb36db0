#include "runtime.hpp"

#include <algorithm>
#include <coroutine>
#include <deque>
#include <exception>

namespace dfsim {

const char* node_state_name(NodeState state) {
  switch (state) {
    case NodeState::Running: return "running";
    case NodeState::BlockedOnSend: return "blocked_on_send";
    case NodeState::BlockedOnReceive: return "blocked_on_receive";
    case NodeState::Done: return "done";
  }
  return "?";
}

std::optional<std::vector<NodeStatusView>> detect_deadlock(
    std::span<const NodeStatusView> statuses) {
  bool any_unfinished = false;
  for (const NodeStatusView& s : statuses) {
    if (s.state == NodeState::Running) return std::nullopt;
    if (s.state != NodeState::Done) any_unfinished = true;
  }
  if (!any_unfinished) return std::nullopt;
  std::vector<NodeStatusView> blocked;
  for (const NodeStatusView& s : statuses) {
    if (s.state != NodeState::Done) blocked.push_back(s);
  }
  return blocked;
}

namespace {

// One node's firing loop, runs as a coroutine suspended at channel
// operations until the scheduler can satisfy them.
class Process {
 public:
  struct promise_type {
    std::exception_ptr exception;

    Process get_return_object() {
      return Process(Handle::from_promise(*this));
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    void return_void() {}
    void unhandled_exception() { exception = std::current_exception(); }
  };
  using Handle = std::coroutine_handle<promise_type>;

  Process() = default;
  explicit Process(Handle h) : handle_(h) {}
  Process(Process&& other) noexcept : handle_(other.handle_) {
    other.handle_ = {};
  }
  Process& operator=(Process&& other) noexcept {
    if (this != &other) {
      if (handle_) handle_.destroy();
      handle_ = other.handle_;
      other.handle_ = {};
    }
    return *this;
  }
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;
  ~Process() {
    if (handle_) handle_.destroy();
  }

  Handle handle() const { return handle_; }

 private:
  Handle handle_;
};

class Runtime;

struct NodeCtx {
  Runtime* rt;
  NodeId id;
};

class Runtime {
 public:
  explicit Runtime(const GraphSpec& graph);

  SimulationReport run();

  // --- called from awaitables ---
  bool send_ready(ChannelId ch) const { return channels_[ch].can_enqueue(); }
  bool recv_ready(ChannelId ch) const { return channels_[ch].can_dequeue(); }

  void park_sender(NodeId node, ChannelId ch) {
    records_[node].state = NodeState::BlockedOnSend;
    records_[node].blocked_channel = ch;
    pending_sender_[ch] = node;
  }
  void park_receiver(NodeId node, ChannelId ch) {
    records_[node].state = NodeState::BlockedOnReceive;
    records_[node].blocked_channel = ch;
    pending_receiver_[ch] = node;
  }

  void complete_send(NodeId node, ChannelId ch, Value v) {
    records_[node].local_time = channels_[ch].enqueue(
        std::move(v), records_[node].local_time);
    wake(pending_receiver_[ch]);
  }
  std::optional<Value> complete_recv(NodeId node, ChannelId ch) {
    auto r = channels_[ch].dequeue(records_[node].local_time);
    if (!r) return std::nullopt;  // end of stream
    records_[node].local_time = r->second;
    wake(pending_sender_[ch]);
    return std::move(r->first);
  }

  void advance(NodeId node, Cycle cycles) {
    records_[node].local_time += cycles;
  }
  void record_output(NodeId node, Value v) {
    sink_outputs_[node].emplace_back(std::move(v),
                                     records_[node].local_time);
  }

 private:
  struct NodeRecord {
    NodeState state = NodeState::Running;
    ChannelId blocked_channel = 0;
    Cycle local_time = 0;
    Process process;
  };

  void wake(std::optional<NodeId>& slot) {
    if (!slot) return;
    records_[*slot].state = NodeState::Running;
    ready_.push_back(*slot);
    slot.reset();
  }

  void finish(NodeId id) {
    records_[id].state = NodeState::Done;
    for (ChannelId ch : graph_.node(id).outputs) {
      channels_[ch].close();
      wake(pending_receiver_[ch]);
    }
  }

  SimulationReport assemble() const;

  const GraphSpec& graph_;
  std::vector<Channel> channels_;
  std::vector<NodeRecord> records_;
  std::vector<std::optional<NodeId>> pending_sender_;
  std::vector<std::optional<NodeId>> pending_receiver_;
  std::vector<std::vector<std::pair<Value, Cycle>>> sink_outputs_;
  std::deque<NodeId> ready_;
};

// The awaiters only wait for readiness; the transfer itself happens in the
// coroutine body after co_await returns. Keeping awaiters trivially
// destructible sidesteps a g++ 11 defect where a temporary awaiter holding
// state is destroyed at the suspension point instead of at the end of the
// co_await expression. Readiness cannot be invalidated between wake-up and
// transfer: channels are single-producer single-consumer and the scheduler
// is single-threaded, so nobody else can take the slot or the element.
struct SendReady {
  NodeCtx ctx;
  ChannelId ch;

  bool await_ready() const { return ctx.rt->send_ready(ch); }
  void await_suspend(std::coroutine_handle<>) {
    ctx.rt->park_sender(ctx.id, ch);
  }
  void await_resume() const {}
};

struct RecvReady {
  NodeCtx ctx;
  ChannelId ch;

  bool await_ready() const { return ctx.rt->recv_ready(ch); }
  void await_suspend(std::coroutine_handle<>) {
    ctx.rt->park_receiver(ctx.id, ch);
  }
  void await_resume() const {}
};

// --- node firing loops ---
//
// A firing consumes one element from every input (the element hand-off
// times and the node's clock reconcile through max), produces whatever the
// node kind emits at that same instant, then advances the node's clock by
// its initiation interval.

[[noreturn]] void unequal_streams(const GraphNode& node) {
  throw ProtocolError("node '" + node.name +
                      "': input streams have unequal lengths");
}

Process map_process(NodeCtx ctx, const GraphNode& node) {
  const auto& p = std::get<MapParams>(node.params);
  std::vector<Value> args(node.inputs.size());
  for (;;) {
    co_await RecvReady{ctx, node.inputs[0]};
    auto first = ctx.rt->complete_recv(ctx.id, node.inputs[0]);
    if (!first) {
      for (std::size_t k = 1; k < node.inputs.size(); ++k) {
        co_await RecvReady{ctx, node.inputs[k]};
        if (ctx.rt->complete_recv(ctx.id, node.inputs[k])) {
          unequal_streams(node);
        }
      }
      break;
    }
    args[0] = std::move(*first);
    for (std::size_t k = 1; k < node.inputs.size(); ++k) {
      co_await RecvReady{ctx, node.inputs[k]};
      auto v = ctx.rt->complete_recv(ctx.id, node.inputs[k]);
      if (!v) unequal_streams(node);
      args[k] = std::move(*v);
    }
    co_await SendReady{ctx, node.outputs[0]};
    ctx.rt->complete_send(ctx.id, node.outputs[0], p.f(args));
    ctx.rt->advance(ctx.id, node.initiation_interval);
  }
}

// Shared by Reduce and MemReduce: the loop is identical, only the
// accumulator's shape differs. The accumulator goes out in the same firing
// that consumes the last element of a group.
Process reduce_process(NodeCtx ctx, const GraphNode& node) {
  const auto& p = std::get<ReduceParams>(node.params);
  std::vector<Value> args(1 + node.inputs.size());
  for (;;) {
    Value acc = p.init;
    for (std::uint64_t i = 0; i < p.group; ++i) {
      co_await RecvReady{ctx, node.inputs[0]};
      auto first = ctx.rt->complete_recv(ctx.id, node.inputs[0]);
      if (!first) {
        if (i != 0) {
          throw ProtocolError("node '" + node.name +
                              "': stream ended mid-group");
        }
        for (std::size_t k = 1; k < node.inputs.size(); ++k) {
          co_await RecvReady{ctx, node.inputs[k]};
          if (ctx.rt->complete_recv(ctx.id, node.inputs[k])) {
            unequal_streams(node);
          }
        }
        co_return;
      }
      args[1] = std::move(*first);
      for (std::size_t k = 1; k < node.inputs.size(); ++k) {
        co_await RecvReady{ctx, node.inputs[k]};
        auto v = ctx.rt->complete_recv(ctx.id, node.inputs[k]);
        if (!v) unequal_streams(node);
        args[1 + k] = std::move(*v);
      }
      args[0] = std::move(acc);
      acc = p.f(args);
      if (i + 1 == p.group) {
        co_await SendReady{ctx, node.outputs[0]};
        ctx.rt->complete_send(ctx.id, node.outputs[0], acc);
      }
      ctx.rt->advance(ctx.id, node.initiation_interval);
    }
  }
}

Process repeat_process(NodeCtx ctx, const GraphNode& node) {
  const auto& p = std::get<RepeatParams>(node.params);
  for (;;) {
    co_await RecvReady{ctx, node.inputs[0]};
    auto v = ctx.rt->complete_recv(ctx.id, node.inputs[0]);
    if (!v) break;
    for (std::uint64_t r = 0; r < p.count; ++r) {
      co_await SendReady{ctx, node.outputs[0]};
      ctx.rt->complete_send(ctx.id, node.outputs[0], *v);
      ctx.rt->advance(ctx.id, node.initiation_interval);
    }
  }
}

Process scan_process(NodeCtx ctx, const GraphNode& node) {
  const auto& p = std::get<ScanParams>(node.params);
  for (;;) {
    Value state = p.init;
    for (std::uint64_t i = 0; i < p.group; ++i) {
      co_await RecvReady{ctx, node.inputs[0]};
      auto v = ctx.rt->complete_recv(ctx.id, node.inputs[0]);
      if (!v) {
        if (i != 0) {
          throw ProtocolError("node '" + node.name +
                              "': stream ended mid-group");
        }
        co_return;
      }
      const Value args_update[] = {state, *v};
      Value next = p.update(args_update);
      const Value args_emit[] = {state, next, *v};
      co_await SendReady{ctx, node.outputs[0]};
      ctx.rt->complete_send(ctx.id, node.outputs[0], p.emit(args_emit));
      state = std::move(next);
      ctx.rt->advance(ctx.id, node.initiation_interval);
    }
  }
}

Process broadcast_process(NodeCtx ctx, const GraphNode& node) {
  for (;;) {
    co_await RecvReady{ctx, node.inputs[0]};
    auto v = ctx.rt->complete_recv(ctx.id, node.inputs[0]);
    if (!v) break;
    for (ChannelId out : node.outputs) {
      co_await SendReady{ctx, out};
      ctx.rt->complete_send(ctx.id, out, *v);
    }
    ctx.rt->advance(ctx.id, node.initiation_interval);
  }
}

Process source_process(NodeCtx ctx, const GraphNode& node) {
  const auto& p = std::get<SourceParams>(node.params);
  for (std::uint64_t c = 0; c < p.cycles_through; ++c) {
    for (const Value& v : p.data) {
      co_await SendReady{ctx, node.outputs[0]};
      ctx.rt->complete_send(ctx.id, node.outputs[0], v);
      ctx.rt->advance(ctx.id, node.initiation_interval);
    }
  }
}

Process sink_process(NodeCtx ctx, const GraphNode& node) {
  for (;;) {
    co_await RecvReady{ctx, node.inputs[0]};
    auto v = ctx.rt->complete_recv(ctx.id, node.inputs[0]);
    if (!v) break;
    ctx.rt->record_output(ctx.id, std::move(*v));
    ctx.rt->advance(ctx.id, node.initiation_interval);
  }
}

Process make_process(Runtime& rt, const GraphNode& node) {
  NodeCtx ctx{&rt, node.id};
  switch (node.kind) {
    case NodeKind::Map: return map_process(ctx, node);
    case NodeKind::Reduce:
    case NodeKind::MemReduce: return reduce_process(ctx, node);
    case NodeKind::Repeat: return repeat_process(ctx, node);
    case NodeKind::Scan: return scan_process(ctx, node);
    case NodeKind::Broadcast: return broadcast_process(ctx, node);
    case NodeKind::Source: return source_process(ctx, node);
    case NodeKind::Sink: return sink_process(ctx, node);
  }
  throw ConfigError("unknown node kind");
}

Runtime::Runtime(const GraphSpec& graph) : graph_(graph) {
  channels_.reserve(graph.channels().size());
  for (const GraphChannel& ch : graph.channels()) {
    channels_.emplace_back(ch.config, ch.name);
  }
  pending_sender_.resize(channels_.size());
  pending_receiver_.resize(channels_.size());
  records_.resize(graph.nodes().size());
  sink_outputs_.resize(graph.nodes().size());
  for (const GraphNode& node : graph.nodes()) {
    records_[node.id].process = make_process(*this, node);
  }
}

SimulationReport Runtime::run() {
  for (const GraphNode& node : graph_.nodes()) ready_.push_back(node.id);
  while (!ready_.empty()) {
    const NodeId id = ready_.front();
    ready_.pop_front();
    records_[id].state = NodeState::Running;
    auto handle = records_[id].process.handle();
    handle.resume();
    if (handle.done()) {
      if (handle.promise().exception) {
        std::rethrow_exception(handle.promise().exception);
      }
      finish(id);
    }
  }
  return assemble();
}

SimulationReport Runtime::assemble() const {
  SimulationReport report;

  std::vector<NodeStatusView> statuses;
  statuses.reserve(records_.size());
  for (NodeId id = 0; id < records_.size(); ++id) {
    statuses.push_back(
        {id, records_[id].state, records_[id].blocked_channel});
  }
  auto blocked = detect_deadlock(statuses);
  report.completed = !blocked.has_value();
  if (blocked) {
    for (const NodeStatusView& s : *blocked) {
      report.blocked.push_back({s.id, graph_.node(s.id).name, s.state,
                                s.blocked_channel,
                                graph_.channel(s.blocked_channel).name,
                                records_[s.id].local_time});
    }
  }

  for (const GraphChannel& ch : graph_.channels()) {
    report.channels.push_back({ch.id, ch.name, ch.config.depth,
                               ch.config.latency, ch.long_role,
                               graph_.source_fed(ch.id),
                               channels_[ch.id].stats()});
  }

  for (const GraphNode& node : graph_.nodes()) {
    if (node.kind != NodeKind::Sink) continue;
    report.sinks.push_back(
        {node.id, node.name, sink_outputs_[node.id]});
    if (!sink_outputs_[node.id].empty()) {
      report.total_cycles = std::max(report.total_cycles,
                                     sink_outputs_[node.id].back().second);
    }
  }
  return report;
}

}  // namespace

SimulationReport run(const GraphSpec& graph) {
  Runtime rt(graph);
  return rt.run();
}

}  // namespace dfsim
