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

#include "hpenet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hpenet/error.hpp"

namespace hpenet {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_extents(const Shape& shape) {
  for (auto extent : shape) {
    if (extent == 0) {
      throw DimensionError("tensor extents must be >= 1, got " +
                           shape_string(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  check_extents(shape);
  storage_->values.assign(shape_size(shape), fill);
  storage_->shape = std::move(shape);
  storage_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  check_extents(shape);
  if (values.size() != shape_size(shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_string(shape));
  }
  storage_->shape = std::move(shape);
  storage_->values = std::move(values);
  storage_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, std::vector<double>{value}, requires_grad);
}

Tensor::Storage& Tensor::storage() const {
  if (!storage_) throw UsageError("use of an undefined tensor");
  return *storage_;
}

const Shape& Tensor::shape() const { return storage().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::size() const { return storage().values.size(); }

std::span<double> Tensor::values() { return storage().values; }
std::span<const double> Tensor::values() const { return storage().values; }

double Tensor::item() const {
  if (size() != 1) {
    throw UsageError("item() on tensor of shape " + shape_string(shape()));
  }
  return storage().values[0];
}

bool Tensor::requires_grad() const { return storage().requires_grad; }
void Tensor::set_requires_grad(bool flag) { storage().requires_grad = flag; }

bool Tensor::has_grad() const { return !storage().grad.empty(); }

std::span<double> Tensor::grad() const {
  auto& s = storage();
  if (s.grad.empty()) s.grad.assign(s.values.size(), 0.0);
  return s.grad;
}

void Tensor::zero_grad() {
  auto& s = storage();
  s.grad.assign(s.values.size(), 0.0);
}

Tensor Tensor::clone() const {
  const auto& s = storage();
  return Tensor(s.shape, s.values, false);
}

void Graph::record(std::string_view op, const Tensor& output,
                   std::function<void()> backward_rule) {
  if (!recording_) return;
  entries_.push_back({std::string(op), output, std::move(backward_rule)});
}

void Graph::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " +
                     shape_string(loss.shape()));
  }
  Tensor seed = loss;
  seed.grad()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->backward_rule) it->backward_rule();
  }
}

std::optional<std::string> Graph::first_non_finite() const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto values = entries_[i].output.values();
    if (std::any_of(values.begin(), values.end(),
                    [](double v) { return !std::isfinite(v); })) {
      return entries_[i].op + " (operation #" + std::to_string(i) + ", shape " +
             shape_string(entries_[i].output.shape()) + ")";
    }
  }
  return std::nullopt;
}

}  // namespace hpenet
