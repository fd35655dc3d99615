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
#include <span>
#include <vector>

#include "hpenet/tensor.hpp"

namespace hpenet {

enum class Activation { relu, sigmoid, sin, cos };
enum class Reduction { max, mean };
enum class NormMode { train, eval };

// Every op below records its backward rule on `graph` when any input
// requires a gradient; the output then requires a gradient as well.

/// x[..., Cin] * weight[Cin, Cout] (+ bias[Cout]) along the trailing axis.
Tensor linear(Graph& graph, const Tensor& x, const Tensor& weight,
              const Tensor& bias = {});

Tensor elementwise(Graph& graph, const Tensor& x, Activation kind);
inline Tensor relu(Graph& graph, const Tensor& x) {
  return elementwise(graph, x, Activation::relu);
}
inline Tensor sigmoid(Graph& graph, const Tensor& x) {
  return elementwise(graph, x, Activation::sigmoid);
}

Tensor add(Graph& graph, const Tensor& a, const Tensor& b);
Tensor mul(Graph& graph, const Tensor& a, const Tensor& b);
Tensor scale(Graph& graph, const Tensor& x, double factor);

/// Removes `axis`. Max ties route the gradient to the lowest index.
Tensor reduce(Graph& graph, const Tensor& x, std::size_t axis, Reduction kind);

/// Sum of all entries as a one-element tensor.
Tensor sum(Graph& graph, const Tensor& x);

Tensor concat(Graph& graph, const std::vector<Tensor>& xs, std::size_t axis);

Tensor reshape(Graph& graph, const Tensor& x, Shape shape);

/// Selects rows (slices along axis 0) of x. The output shape is
/// `leading` followed by x's trailing extents; product(leading) must equal
/// indices.size(). Backward scatter-adds.
Tensor gather_rows(Graph& graph, const Tensor& x,
                   std::span<const std::size_t> indices, Shape leading);

/// out[m] = sum_j weights[m*width + j] * x[indices[m*width + j]] for 2-D x.
Tensor weighted_gather_rows(Graph& graph, const Tensor& x,
                            std::span<const std::size_t> indices,
                            std::span<const double> weights, std::size_t width);

/// Per-channel scale/shift plus running statistics of a normalization layer.
struct NormParams {
  Tensor scale;
  Tensor shift;
  Tensor running_mean;
  Tensor running_var;

  static NormParams make(std::size_t channels);
  std::size_t channels() const { return scale.size(); }
};

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kNormMomentum = 0.1;

/// Standardizes each channel (trailing axis) over all leading rows.
/// Train mode uses batch statistics and updates the running ones; eval mode
/// uses the running statistics only.
Tensor normalize(Graph& graph, const Tensor& x, NormParams& params,
                 NormMode mode);

/// Mean over rows of the smoothed negative log-likelihood. The target is
/// (1 - smoothing) on the true class plus smoothing / K on every class.
Tensor cross_entropy_label_smoothed(Graph& graph, const Tensor& logits,
                                    std::span<const int> labels,
                                    double smoothing);

}  // namespace hpenet
