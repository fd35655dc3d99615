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

#include "hpenet/metrics.hpp"

#include <string>

#include "hpenet/error.hpp"

namespace hpenet {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : k_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw UsageError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int prediction) {
  if (truth < 0 || static_cast<std::size_t>(truth) >= k_ || prediction < 0 ||
      static_cast<std::size_t>(prediction) >= k_) {
    throw DataError("label pair (" + std::to_string(truth) + ", " +
                    std::to_string(prediction) + ") outside [0, " +
                    std::to_string(k_) + ")");
  }
  ++counts_[static_cast<std::size_t>(truth) * k_ + static_cast<std::size_t>(prediction)];
  ++total_;
}

void ConfusionMatrix::add(std::span<const int> truth,
                          std::span<const int> prediction) {
  if (truth.size() != prediction.size()) {
    throw DimensionError("truth and prediction lengths differ");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) add(truth[i], prediction[i]);
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += counts_[c * k_ + j];
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += counts_[i * k_ + c];
  return s;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UsageError("metrics of an empty confusion matrix");
  Metrics m;
  std::uint64_t trace = 0;
  double acc_sum = 0.0;
  double iou_sum = 0.0;
  std::size_t acc_classes = 0;
  std::size_t iou_classes = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t row = cm.row_sum(c);
    const std::uint64_t col = cm.col_sum(c);
    trace += tp;
    if (row > 0) {
      acc_sum += static_cast<double>(tp) / static_cast<double>(row);
      ++acc_classes;
    }
    if (row + col > 0) {
      iou_sum += static_cast<double>(tp) / static_cast<double>(row + col - tp);
      ++iou_classes;
    }
  }
  m.oa = static_cast<double>(trace) / static_cast<double>(cm.total());
  m.macc = acc_sum / static_cast<double>(acc_classes);
  m.miou = iou_sum / static_cast<double>(iou_classes);
  return m;
}

std::vector<int> argmax_rows(std::span<const double> values, std::size_t cols) {
  if (cols == 0 || values.size() % cols != 0) {
    throw DimensionError("argmax_rows: buffer is not a multiple of the row width");
  }
  std::vector<int> out(values.size() / cols);
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (values[r * cols + c] > values[r * cols + best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace hpenet
