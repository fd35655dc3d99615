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
#include <vector>

#include "hpenet/tensor.hpp"

namespace hpenet {

struct AdamWOptions {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One parameter as seen by the optimizer. Weight decay is skipped when
/// `decay` is false (normalization scales/shifts, biases).
struct OptimizedParam {
  Tensor tensor;
  bool decay = true;
};

/// Adaptive-moment optimizer with decoupled weight decay.
class AdamW {
 public:
  AdamW(std::vector<OptimizedParam> params, AdamWOptions options);

  /// p <- p (1 - lr * wd), then the bias-corrected moment update.
  /// Gradients are zeroed afterwards. Throws UsageError if a parameter has no
  /// gradient buffer.
  void step();

  void set_learning_rate(double lr) noexcept { options_.learning_rate = lr; }
  const AdamWOptions& options() const noexcept { return options_; }
  std::uint64_t step_count() const noexcept { return step_; }

  const std::vector<OptimizedParam>& params() const noexcept { return params_; }
  std::vector<std::vector<double>>& first_moments() noexcept { return m_; }
  std::vector<std::vector<double>>& second_moments() noexcept { return v_; }
  const std::vector<std::vector<double>>& first_moments() const noexcept {
    return m_;
  }
  const std::vector<std::vector<double>>& second_moments() const noexcept {
    return v_;
  }
  void restore(std::uint64_t step, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  std::vector<OptimizedParam> params_;
  AdamWOptions options_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Cosine decay from `base` to zero over `total_epochs`.
double cosine_learning_rate(double base, std::size_t epoch,
                            std::size_t total_epochs);

}  // namespace hpenet
