#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dfsim {

// Simulated time, measured in cycles.
using Cycle = std::uint64_t;

using NodeId = std::uint32_t;
using ChannelId = std::uint32_t;

// Raised when a graph or channel is configured illegally (bad depth, bad
// arity, mismatched declared widths, ...). Detected before execution.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a run violates stream discipline (enqueue after close, a
// stream ending mid reduction group, width drift inside one channel, ...).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One element travelling through a channel: a scalar, a fixed-width vector,
// or a pair of scalars (used for (rescale, weight) tuples).
class Value {
 public:
  enum class Kind { Scalar, Vector, Pair };

  Value() : data_(0.0) {}

  static Value scalar(double x) { return Value(x); }
  static Value vector(std::vector<double> v) { return Value(std::move(v)); }
  static Value pair(double first, double second) {
    return Value(std::pair<double, double>{first, second});
  }

  Kind kind() const { return static_cast<Kind>(data_.index()); }
  bool is_scalar() const { return kind() == Kind::Scalar; }
  bool is_vector() const { return kind() == Kind::Vector; }
  bool is_pair() const { return kind() == Kind::Pair; }

  double as_scalar() const {
    require(is_scalar(), "scalar");
    return std::get<double>(data_);
  }
  std::span<const double> as_vector() const {
    require(is_vector(), "vector");
    return std::get<std::vector<double>>(data_);
  }
  std::pair<double, double> as_pair() const {
    require(is_pair(), "pair");
    return std::get<std::pair<double, double>>(data_);
  }

  std::size_t width() const {
    return is_vector() ? std::get<std::vector<double>>(data_).size() : 0;
  }

  friend bool operator==(const Value& a, const Value& b) {
    return a.data_ == b.data_;
  }

 private:
  explicit Value(double x) : data_(x) {}
  explicit Value(std::vector<double> v) : data_(std::move(v)) {}
  explicit Value(std::pair<double, double> p) : data_(p) {}

  void require(bool ok, const char* what) const {
    if (!ok) throw ProtocolError(std::string("value is not a ") + what);
  }

  std::variant<double, std::vector<double>, std::pair<double, double>> data_;
};

}  // namespace dfsim
