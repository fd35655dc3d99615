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

#include "hpenet/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hpenet/error.hpp"

namespace hpenet {

AdamW::AdamW(std::vector<OptimizedParam> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.size(), 0.0);
    v_.emplace_back(p.tensor.size(), 0.0);
  }
}

void AdamW::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].tensor.has_grad()) {
      throw UsageError("optimizer step: parameter #" + std::to_string(i) +
                       " " + shape_string(params_[i].tensor.shape()) +
                       " has no gradient");
    }
  }
  ++step_;
  const double lr = options_.learning_rate;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));

  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i].tensor;
    auto values = t.values();
    auto grad = t.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    const double decay = params_[i].decay ? lr * options_.weight_decay : 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] *= 1.0 - decay;
      values[j] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
    t.zero_grad();
  }
}

void AdamW::restore(std::uint64_t step, std::vector<std::vector<double>> m,
                    std::vector<std::vector<double>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw DataError("optimizer state holds " + std::to_string(m.size()) +
                    " moment buffers for " + std::to_string(params_.size()) +
                    " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].size() != params_[i].tensor.size() ||
        v[i].size() != params_[i].tensor.size()) {
      throw DataError("optimizer moment buffer #" + std::to_string(i) +
                      " does not match its parameter");
    }
  }
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

double cosine_learning_rate(double base, std::size_t epoch,
                            std::size_t total_epochs) {
  if (total_epochs == 0) return base;
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace hpenet
