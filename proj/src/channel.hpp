#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "value.hpp"

namespace dfsim {

// Depth value meaning "never blocks the sender".
inline constexpr std::uint64_t kInfiniteDepth =
    std::numeric_limits<std::uint64_t>::max();

struct ChannelConfig {
  std::uint64_t depth = 2;  // max buffered elements; >= 1 or kInfiniteDepth
  Cycle latency = 1;        // cycles between send and earliest receive
};

struct ChannelStats {
  std::uint64_t enqueued = 0;
  std::uint64_t dequeued = 0;
  // Max number of elements simultaneously resident in simulated time
  // (in-flight elements count from the moment they are sent).
  std::uint64_t peak_occupancy = 0;

  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

// Single-producer single-consumer FIFO with timestamped hand-off.
//
// Time semantics are defined purely by the sequence of operations, never by
// host scheduling, so simulated results are reproducible:
//
//   enqueue i at sender time s:  e_i = max(s, d_{i-depth})   (e_i = s if
//                                i < depth or depth infinite)
//   element i becomes readable at e_i + latency
//   dequeue j at receiver time r: d_j = max(r, e_j + latency)
//
// A slot freed by a dequeue at time t accepts a new element at t (the old
// and new element never overlap). Both e and d are non-decreasing because
// each side's local clock is.
//
// enqueue()/dequeue() require the operation to be immediately satisfiable
// (see can_enqueue/can_dequeue); the scheduler parks a node instead of
// calling into a channel that would block.
class Channel {
 public:
  explicit Channel(ChannelConfig cfg, std::string name = "ch");

  const std::string& name() const { return name_; }
  const ChannelConfig& config() const { return config_; }

  // True when the next enqueue's effective time is determined, i.e. the
  // buffer has physical room.
  bool can_enqueue() const;
  // True when a value is buffered or end-of-stream is observable.
  bool can_dequeue() const { return !buffer_.empty() || closed_; }
  // End of stream: producer closed and everything has been drained.
  bool at_end() const { return buffer_.empty() && closed_; }

  // Returns the effective send time e_i (>= sender_time).
  Cycle enqueue(Value v, Cycle sender_time);

  // Returns the dequeued value and the time the hand-off completed, or
  // nullopt at end of stream. Requires can_dequeue().
  std::optional<std::pair<Value, Cycle>> dequeue(Cycle receiver_time);

  // Producer declares it will never enqueue again.
  void close() { closed_ = true; }
  bool closed() const { return closed_; }

  std::size_t size() const { return buffer_.size(); }

  ChannelStats stats() const;

  // Full hand-off history; used for occupancy accounting and invariants.
  const std::vector<Cycle>& entry_times() const { return entry_times_; }
  const std::vector<Cycle>& exit_times() const { return exit_times_; }

 private:
  struct Slot {
    Value value;
    Cycle ready_time;
  };

  ChannelConfig config_;
  std::string name_;
  std::deque<Slot> buffer_;
  std::vector<Cycle> entry_times_;
  std::vector<Cycle> exit_times_;
  std::optional<std::size_t> vector_width_;
  bool closed_ = false;
};

}  // namespace dfsim
