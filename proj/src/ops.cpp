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

#include "hpenet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "hpenet/error.hpp"

namespace hpenet {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

bool tracks(const Graph& graph, std::initializer_list<const Tensor*> inputs) {
  if (!graph.recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) {
    return t->defined() && t->requires_grad();
  });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// Splits `shape` around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor linear(Graph& graph, const Tensor& x, const Tensor& weight,
              const Tensor& bias) {
  if (weight.rank() != 2) {
    throw DimensionError("linear: weight must be 2-D, got " +
                         shape_string(weight.shape()));
  }
  const std::size_t in = weight.dim(0);
  const std::size_t out = weight.dim(1);
  if (x.shape().back() != in) {
    throw DimensionError("linear: input " + shape_string(x.shape()) +
                         " does not match weight " +
                         shape_string(weight.shape()));
  }
  if (bias.defined() && (bias.size() != out)) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) +
                         " does not match weight " +
                         shape_string(weight.shape()));
  }
  const std::size_t rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out;

  const bool track = tracks(graph, {&x, &weight, &bias});
  Tensor y(out_shape, 0.0, track);
  {
    ConstMatrixMap xm(x.values().data(), rows, in);
    ConstMatrixMap wm(weight.values().data(), in, out);
    MatrixMap ym(y.values().data(), rows, out);
    ym.noalias() = xm * wm;
    if (bias.defined()) {
      Eigen::Map<const Eigen::RowVectorXd> bm(bias.values().data(), out);
      ym.rowwise() += bm;
    }
  }
  graph.add_macs(static_cast<std::uint64_t>(rows) * in * out);

  if (track) {
    graph.record("linear", y, [x, weight, bias, y, rows, in, out]() mutable {
      ConstMatrixMap gy(y.grad().data(), rows, out);
      if (x.requires_grad()) {
        MatrixMap gx(x.grad().data(), rows, in);
        ConstMatrixMap wm(weight.values().data(), in, out);
        gx.noalias() += gy * wm.transpose();
      }
      if (weight.requires_grad()) {
        MatrixMap gw(weight.grad().data(), in, out);
        ConstMatrixMap xm(x.values().data(), rows, in);
        gw.noalias() += xm.transpose() * gy;
      }
      if (bias.defined() && bias.requires_grad()) {
        // Fixed row order; Eigen's vectorized reductions depend on alignment.
        auto gb = bias.grad();
        auto gv = y.grad();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t o = 0; o < out; ++o) gb[o] += gv[r * out + o];
        }
      }
    });
  } else {
    graph.record("linear", y, {});
  }
  return y;
}

Tensor elementwise(Graph& graph, const Tensor& x, Activation kind) {
  const bool track = tracks(graph, {&x});
  Tensor y(x.shape(), 0.0, track);
  auto xv = x.values();
  auto yv = y.values();
  const std::size_t n = xv.size();
  switch (kind) {
    case Activation::relu:
      // NaN passes through so that non-finite values stay visible.
      for (std::size_t i = 0; i < n; ++i) yv[i] = xv[i] < 0.0 ? 0.0 : xv[i];
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < n; ++i) yv[i] = 1.0 / (1.0 + std::exp(-xv[i]));
      break;
    case Activation::sin:
      for (std::size_t i = 0; i < n; ++i) yv[i] = std::sin(xv[i]);
      break;
    case Activation::cos:
      for (std::size_t i = 0; i < n; ++i) yv[i] = std::cos(xv[i]);
      break;
  }
  if (!track) {
    graph.record("elementwise", y, {});
    return y;
  }
  graph.record("elementwise", y, [x, y, kind, n]() mutable {
    auto gx = x.grad();
    auto gy = y.grad();
    auto xv = x.values();
    auto yv = y.values();
    switch (kind) {
      case Activation::relu:
        // Subgradient 0 at x == 0.
        for (std::size_t i = 0; i < n; ++i) {
          if (xv[i] > 0.0) gx[i] += gy[i];
        }
        break;
      case Activation::sigmoid:
        for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * yv[i] * (1.0 - yv[i]);
        break;
      case Activation::sin:
        for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * std::cos(xv[i]);
        break;
      case Activation::cos:
        for (std::size_t i = 0; i < n; ++i) gx[i] -= gy[i] * std::sin(xv[i]);
        break;
    }
  });
  return y;
}

Tensor add(Graph& graph, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const bool track = tracks(graph, {&a, &b});
  Tensor y(a.shape(), 0.0, track);
  auto av = a.values();
  auto bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] + bv[i];
  if (!track) {
    graph.record("add", y, {});
    return y;
  }
  graph.record("add", y, [a, b, y]() mutable {
    auto gy = y.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
    }
  });
  return y;
}

Tensor mul(Graph& graph, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const bool track = tracks(graph, {&a, &b});
  Tensor y(a.shape(), 0.0, track);
  auto av = a.values();
  auto bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] * bv[i];
  if (!track) {
    graph.record("mul", y, {});
    return y;
  }
  graph.record("mul", y, [a, b, y]() mutable {
    auto gy = y.grad();
    auto av = a.values();
    auto bv = b.values();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
  return y;
}

Tensor scale(Graph& graph, const Tensor& x, double factor) {
  const bool track = tracks(graph, {&x});
  Tensor y(x.shape(), 0.0, track);
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = xv[i] * factor;
  if (!track) {
    graph.record("scale", y, {});
    return y;
  }
  graph.record("scale", y, [x, y, factor]() mutable {
    auto gx = x.grad();
    auto gy = y.grad();
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * factor;
  });
  return y;
}

Tensor reduce(Graph& graph, const Tensor& x, std::size_t axis, Reduction kind) {
  if (axis >= x.rank()) {
    throw DimensionError("reduce: axis " + std::to_string(axis) +
                         " invalid for shape " + shape_string(x.shape()));
  }
  const AxisSplit s = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape.push_back(1);

  const bool track = tracks(graph, {&x});
  Tensor y(out_shape, 0.0, track);
  auto xv = x.values();
  auto yv = y.values();

  if (kind == Reduction::max) {
    std::vector<std::size_t> argmax(s.outer * s.inner);
    for (std::size_t o = 0; o < s.outer; ++o) {
      const double* base = xv.data() + o * s.extent * s.inner;
      double* out = yv.data() + o * s.inner;
      std::size_t* arg = argmax.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) {
        out[i] = base[i];
        arg[i] = 0;
      }
      for (std::size_t e = 1; e < s.extent; ++e) {
        const double* row = base + e * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) {
          // Strict comparison keeps the lowest index on ties; NaN wins.
          if (row[i] > out[i] || (std::isnan(row[i]) && !std::isnan(out[i]))) {
            out[i] = row[i];
            arg[i] = e;
          }
        }
      }
    }
    if (!track) {
      graph.record("reduce_max", y, {});
      return y;
    }
    graph.record("reduce_max", y,
                 [x, y, s, argmax = std::move(argmax)]() mutable {
                   auto gx = x.grad();
                   auto gy = y.grad();
                   for (std::size_t o = 0; o < s.outer; ++o) {
                     for (std::size_t i = 0; i < s.inner; ++i) {
                       const std::size_t flat = o * s.inner + i;
                       gx[(o * s.extent + argmax[flat]) * s.inner + i] += gy[flat];
                     }
                   }
                 });
    return y;
  }

  const double inv = 1.0 / static_cast<double>(s.extent);
  for (std::size_t o = 0; o < s.outer; ++o) {
    const double* base = xv.data() + o * s.extent * s.inner;
    double* out = yv.data() + o * s.inner;
    for (std::size_t e = 0; e < s.extent; ++e) {
      const double* row = base + e * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) out[i] += row[i];
    }
    for (std::size_t i = 0; i < s.inner; ++i) out[i] *= inv;
  }
  if (!track) {
    graph.record("reduce_mean", y, {});
    return y;
  }
  graph.record("reduce_mean", y, [x, y, s, inv]() mutable {
    auto gx = x.grad();
    auto gy = y.grad();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t e = 0; e < s.extent; ++e) {
        double* row = gx.data() + (o * s.extent + e) * s.inner;
        const double* g = gy.data() + o * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) row[i] += g[i] * inv;
      }
    }
  });
  return y;
}

Tensor sum(Graph& graph, const Tensor& x) {
  const bool track = tracks(graph, {&x});
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor y = Tensor::scalar(total, track);
  if (!track) {
    graph.record("sum", y, {});
    return y;
  }
  graph.record("sum", y, [x, y]() mutable {
    const double g = y.grad()[0];
    for (double& v : x.grad()) v += g;
  });
  return y;
}

Tensor concat(Graph& graph, const std::vector<Tensor>& xs, std::size_t axis) {
  if (xs.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = xs.front().shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) +
                         " invalid for shape " + shape_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  bool track = false;
  for (const auto& t : xs) {
    const Shape& s = t.shape();
    bool compatible = s.size() == first.size();
    for (std::size_t i = 0; compatible && i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) compatible = false;
    }
    if (!compatible) {
      throw DimensionError("concat: incompatible shapes " + shape_string(first) +
                           " and " + shape_string(s) + " along axis " +
                           std::to_string(axis));
    }
    out_shape[axis] += s[axis];
    track = track || tracks(graph, {&t});
  }

  const AxisSplit out_split = split_axis(out_shape, axis);
  Tensor y(out_shape, 0.0, track);
  auto yv = y.values();
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const auto& t : xs) {
    const AxisSplit s = split_axis(t.shape(), axis);
    const std::size_t block = s.extent * s.inner;
    auto tv = t.values();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(tv.data() + o * block, block,
                  yv.data() + o * out_split.extent * out_split.inner + offset);
    }
    offsets.push_back(offset);
    offset += block;
  }
  if (!track) {
    graph.record("concat", y, {});
    return y;
  }
  graph.record("concat", y, [xs, y, out_split, axis,
                             offsets = std::move(offsets)]() mutable {
    auto gy = y.grad();
    for (std::size_t n = 0; n < xs.size(); ++n) {
      auto& t = xs[n];
      if (!t.requires_grad()) continue;
      const AxisSplit s = split_axis(t.shape(), axis);
      const std::size_t block = s.extent * s.inner;
      auto gt = t.grad();
      for (std::size_t o = 0; o < s.outer; ++o) {
        const double* src =
            gy.data() + o * out_split.extent * out_split.inner + offsets[n];
        double* dst = gt.data() + o * block;
        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
      }
    }
  });
  return y;
}

Tensor reshape(Graph& graph, const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) +
                         " as " + shape_string(shape));
  }
  const bool track = tracks(graph, {&x});
  auto xv = x.values();
  Tensor y(std::move(shape), std::vector<double>(xv.begin(), xv.end()), track);
  if (!track) {
    graph.record("reshape", y, {});
    return y;
  }
  graph.record("reshape", y, [x, y]() mutable {
    auto gx = x.grad();
    auto gy = y.grad();
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
  });
  return y;
}

Tensor gather_rows(Graph& graph, const Tensor& x,
                   std::span<const std::size_t> indices, Shape leading) {
  if (shape_size(leading) != indices.size()) {
    throw DimensionError("gather_rows: leading shape " + shape_string(leading) +
                         " does not hold " + std::to_string(indices.size()) +
                         " indices");
  }
  const std::size_t rows = x.dim(0);
  const std::size_t width = x.size() / rows;
  Shape out_shape = std::move(leading);
  out_shape.insert(out_shape.end(), x.shape().begin() + 1, x.shape().end());

  const bool track = tracks(graph, {&x});
  Tensor y(out_shape, 0.0, track);
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[i]) +
                           " out of range for " + std::to_string(rows) + " rows");
    }
    std::copy_n(xv.data() + indices[i] * width, width, yv.data() + i * width);
  }
  if (!track) {
    graph.record("gather_rows", y, {});
    return y;
  }
  graph.record("gather_rows", y,
               [x, y, width,
                idx = std::vector<std::size_t>(indices.begin(),
                                               indices.end())]() mutable {
                 auto gx = x.grad();
                 auto gy = y.grad();
                 for (std::size_t i = 0; i < idx.size(); ++i) {
                   double* dst = gx.data() + idx[i] * width;
                   const double* src = gy.data() + i * width;
                   for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
                 }
               });
  return y;
}

Tensor weighted_gather_rows(Graph& graph, const Tensor& x,
                            std::span<const std::size_t> indices,
                            std::span<const double> weights,
                            std::size_t width) {
  if (x.rank() != 2) {
    throw DimensionError("weighted_gather_rows: input must be 2-D, got " +
                         shape_string(x.shape()));
  }
  if (width == 0 || indices.size() % width != 0 ||
      weights.size() != indices.size()) {
    throw DimensionError("weighted_gather_rows: inconsistent index/weight table");
  }
  const std::size_t rows = x.dim(0);
  const std::size_t channels = x.dim(1);
  const std::size_t out_rows = indices.size() / width;
  const bool track = tracks(graph, {&x});
  Tensor y({out_rows, channels}, 0.0, track);
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t m = 0; m < out_rows; ++m) {
    double* out = yv.data() + m * channels;
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t src = indices[m * width + j];
      if (src >= rows) {
        throw DimensionError("weighted_gather_rows: index out of range");
      }
      const double w = weights[m * width + j];
      const double* row = xv.data() + src * channels;
      for (std::size_t c = 0; c < channels; ++c) out[c] += w * row[c];
    }
  }
  if (!track) {
    graph.record("weighted_gather_rows", y, {});
    return y;
  }
  graph.record(
      "weighted_gather_rows", y,
      [x, y, width, channels, out_rows,
       idx = std::vector<std::size_t>(indices.begin(), indices.end()),
       w = std::vector<double>(weights.begin(), weights.end())]() mutable {
        auto gx = x.grad();
        auto gy = y.grad();
        for (std::size_t m = 0; m < out_rows; ++m) {
          const double* g = gy.data() + m * channels;
          for (std::size_t j = 0; j < width; ++j) {
            double* dst = gx.data() + idx[m * width + j] * channels;
            const double wj = w[m * width + j];
            for (std::size_t c = 0; c < channels; ++c) dst[c] += wj * g[c];
          }
        }
      });
  return y;
}

NormParams NormParams::make(std::size_t channels) {
  NormParams p;
  p.scale = Tensor({channels}, 1.0, true);
  p.shift = Tensor({channels}, 0.0, true);
  p.running_mean = Tensor({channels}, 0.0);
  p.running_var = Tensor({channels}, 1.0);
  return p;
}

Tensor normalize(Graph& graph, const Tensor& x, NormParams& params,
                 NormMode mode) {
  const std::size_t channels = x.shape().back();
  if (params.channels() != channels) {
    throw DimensionError("normalize: input " + shape_string(x.shape()) +
                         " does not match " + std::to_string(params.channels()) +
                         " channels");
  }
  const std::size_t rows = x.size() / channels;
  const bool track = tracks(graph, {&x, &params.scale, &params.shift});
  Tensor y(x.shape(), 0.0, track);
  auto xv = x.values();
  auto yv = y.values();
  auto gamma = params.scale.values();
  auto beta = params.shift.values();

  std::vector<double> mean(channels, 0.0);
  std::vector<double> inv_std(channels, 0.0);
  if (mode == NormMode::train) {
    std::vector<double> var(channels, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = xv.data() + r * channels;
      for (std::size_t c = 0; c < channels; ++c) mean[c] += row[c];
    }
    for (auto& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = xv.data() + r * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = row[c] - mean[c];
        var[c] += d * d;
      }
    }
    auto rm = params.running_mean.values();
    auto rv = params.running_var.values();
    const double unbias =
        rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1) : 1.0;
    for (std::size_t c = 0; c < channels; ++c) {
      var[c] /= static_cast<double>(rows);
      inv_std[c] = 1.0 / std::sqrt(var[c] + kNormEpsilon);
      rm[c] = (1.0 - kNormMomentum) * rm[c] + kNormMomentum * mean[c];
      rv[c] = (1.0 - kNormMomentum) * rv[c] + kNormMomentum * var[c] * unbias;
    }
  } else {
    auto rm = params.running_mean.values();
    auto rv = params.running_var.values();
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = rm[c];
      inv_std[c] = 1.0 / std::sqrt(rv[c] + kNormEpsilon);
    }
  }

  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * channels;
    double* out = yv.data() + r * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      out[c] = gamma[c] * (row[c] - mean[c]) * inv_std[c] + beta[c];
    }
  }
  if (!track) {
    graph.record("normalize", y, {});
    return y;
  }
  graph.record("normalize", y,
               [x, y, scale = params.scale, shift = params.shift, mode, rows,
                channels, mean = std::move(mean),
                inv_std = std::move(inv_std)]() mutable {
                 auto gy = y.grad();
                 auto xv = x.values();
                 auto gamma = scale.values();
                 std::vector<double> sum_g(channels, 0.0);
                 std::vector<double> sum_gx(channels, 0.0);
                 for (std::size_t r = 0; r < rows; ++r) {
                   const double* g = gy.data() + r * channels;
                   const double* row = xv.data() + r * channels;
                   for (std::size_t c = 0; c < channels; ++c) {
                     const double xhat = (row[c] - mean[c]) * inv_std[c];
                     sum_g[c] += g[c];
                     sum_gx[c] += g[c] * xhat;
                   }
                 }
                 if (scale.requires_grad()) {
                   auto gs = scale.grad();
                   for (std::size_t c = 0; c < channels; ++c) gs[c] += sum_gx[c];
                 }
                 if (shift.requires_grad()) {
                   auto gb = shift.grad();
                   for (std::size_t c = 0; c < channels; ++c) gb[c] += sum_g[c];
                 }
                 if (!x.requires_grad()) return;
                 auto gx = x.grad();
                 const double inv_rows = 1.0 / static_cast<double>(rows);
                 for (std::size_t r = 0; r < rows; ++r) {
                   const double* g = gy.data() + r * channels;
                   const double* row = xv.data() + r * channels;
                   double* dst = gx.data() + r * channels;
                   for (std::size_t c = 0; c < channels; ++c) {
                     const double k = gamma[c] * inv_std[c];
                     if (mode == NormMode::eval) {
                       dst[c] += k * g[c];
                     } else {
                       const double xhat = (row[c] - mean[c]) * inv_std[c];
                       dst[c] += k * (g[c] - sum_g[c] * inv_rows -
                                      xhat * sum_gx[c] * inv_rows);
                     }
                   }
                 }
               });
  return y;
}

Tensor cross_entropy_label_smoothed(Graph& graph, const Tensor& logits,
                                    std::span<const int> labels,
                                    double smoothing) {
  if (smoothing < 0.0 || smoothing >= 1.0) {
    throw UsageError("cross_entropy: smoothing must lie in [0, 1), got " +
                     std::to_string(smoothing));
  }
  const std::size_t classes = logits.shape().back();
  const std::size_t rows = logits.size() / classes;
  if (labels.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits " + shape_string(logits.shape()));
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw DataError("cross_entropy: label " + std::to_string(labels[i]) +
                      " at row " + std::to_string(i) + " outside [0, " +
                      std::to_string(classes) + ")");
    }
  }

  const double off = smoothing / static_cast<double>(classes);
  const double on = 1.0 - smoothing + off;
  auto lv = logits.values();
  std::vector<double> probs(lv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* z = lv.data() + i * classes;
    double* p = probs.data() + i * classes;
    const double zmax = *std::max_element(z, z + classes);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
    const double log_denom = std::log(denom) + zmax;
    for (std::size_t c = 0; c < classes; ++c) {
      const double logp = z[c] - log_denom;
      p[c] = std::exp(logp);
      const double q = static_cast<std::size_t>(labels[i]) == c ? on : off;
      total -= q * logp;
    }
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const bool track = tracks(graph, {&logits});
  Tensor loss = Tensor::scalar(total * inv_rows, track);
  if (!track) {
    graph.record("cross_entropy", loss, {});
    return loss;
  }
  graph.record("cross_entropy", loss,
               [logits, loss, probs = std::move(probs), classes, rows, on, off,
                inv_rows, lab = std::vector<int>(labels.begin(),
                                                 labels.end())]() mutable {
                 const double g = loss.grad()[0] * inv_rows;
                 auto gl = logits.grad();
                 for (std::size_t i = 0; i < rows; ++i) {
                   for (std::size_t c = 0; c < classes; ++c) {
                     const double q =
                         static_cast<std::size_t>(lab[i]) == c ? on : off;
                     gl[i * classes + c] += g * (probs[i * classes + c] - q);
                   }
                 }
               });
  return loss;
}

}  // namespace hpenet
