// Copyright 2026 The HPENet Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hpenet {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage, which is what
/// lets the autodiff tape and the parameter registry refer to one parameter.
/// Use clone() for an independent deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(storage_); }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<double> values();
  std::span<const double> values() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  /// Gradient buffer, allocated (zero-filled) on first access.
  /// Handles share storage, so the buffer stays writable through const.
  std::span<double> grad() const;
  void zero_grad();

  /// Deep copy of shape and values; gradient and grad flag are dropped.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const noexcept {
    return storage_ == other.storage_;
  }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  Storage& storage() const;

  std::shared_ptr<Storage> storage_;
};

/// Ordered record of differentiable operations (a tape).
///
/// Operations append a backward rule when any of their inputs requires a
/// gradient. backward() replays the rules in reverse recording order, which is
/// a valid reverse topological order because inputs always exist before the
/// operation that consumes them.
class Graph {
 public:
  explicit Graph(bool recording = true) : recording_(recording) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return recording_; }

  void record(std::string_view op, const Tensor& output,
              std::function<void()> backward_rule);

  /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every tensor
  /// reachable from the loss. Throws UsageError for a non-scalar loss.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return entries_.size(); }
  void clear() { entries_.clear(); }

  /// Multiply-accumulate count of every linear evaluated under this graph.
  std::uint64_t macs() const noexcept { return macs_; }
  void add_macs(std::uint64_t n) noexcept { macs_ += n; }

  /// Name of the first recorded operation whose output holds NaN or Inf.
  std::optional<std::string> first_non_finite() const;

 private:
  struct Entry {
    std::string op;
    Tensor output;
    std::function<void()> backward_rule;
  };

  bool recording_;
  std::vector<Entry> entries_;
  std::uint64_t macs_ = 0;
};

}  // namespace hpenet
