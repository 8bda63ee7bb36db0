#include "channel.hpp"

#include <algorithm>

namespace dfsim {

Channel::Channel(ChannelConfig cfg, std::string name)
    : config_(cfg), name_(std::move(name)) {
  if (config_.depth == 0) {
    throw ConfigError("channel '" + name_ + "': depth must be >= 1");
  }
}

bool Channel::can_enqueue() const {
  if (closed_) return true;  // the attempt itself is the protocol error
  if (config_.depth == kInfiniteDepth) return true;
  return buffer_.size() < config_.depth;
}

Cycle Channel::enqueue(Value v, Cycle sender_time) {
  if (closed_) {
    throw ProtocolError("channel '" + name_ + "': enqueue after close");
  }
  if (!can_enqueue()) {
    throw std::logic_error("channel '" + name_ +
                           "': enqueue on a full channel would block");
  }
  if (v.is_vector()) {
    if (vector_width_ && *vector_width_ != v.width()) {
      throw ProtocolError("channel '" + name_ + "': vector width changed");
    }
    vector_width_ = v.width();
  }

  const std::size_t i = entry_times_.size();
  Cycle effective = sender_time;
  if (config_.depth != kInfiniteDepth && i >= config_.depth) {
    // Slot reuse: wait (in simulated time) for the dequeue that freed it.
    effective = std::max(effective, exit_times_[i - config_.depth]);
  }
  buffer_.push_back(Slot{std::move(v), effective + config_.latency});
  entry_times_.push_back(effective);
  return effective;
}

std::optional<std::pair<Value, Cycle>> Channel::dequeue(Cycle receiver_time) {
  if (buffer_.empty()) {
    if (closed_) return std::nullopt;
    throw std::logic_error("channel '" + name_ +
                           "': dequeue on an empty channel would block");
  }
  Slot slot = std::move(buffer_.front());
  buffer_.pop_front();
  const Cycle completed = std::max(receiver_time, slot.ready_time);
  exit_times_.push_back(completed);
  return std::make_pair(std::move(slot.value), completed);
}

ChannelStats Channel::stats() const {
  ChannelStats s;
  s.enqueued = entry_times_.size();
  s.dequeued = exit_times_.size();
  // Entries and exits are both sorted; merge to find, for each entry, how
  // many earlier elements are still resident at that instant. A slot freed
  // at time t does not overlap an entry at time t.
  std::size_t freed = 0;
  for (std::size_t i = 0; i < entry_times_.size(); ++i) {
    while (freed < exit_times_.size() && exit_times_[freed] <= entry_times_[i]) {
      ++freed;
    }
    // With zero latency, freed can briefly exceed i + 1: a later element
    // entering and leaving at this same instant is already counted as an
    // exit. The peak of any tied-time group is observed at its last entry,
    // where the subtraction is exact, so clamping loses nothing.
    if (i + 1 > freed) {
      s.peak_occupancy = std::max<std::uint64_t>(s.peak_occupancy,
                                                 i + 1 - freed);
    }
  }
  return s;
}

}  // namespace dfsim
