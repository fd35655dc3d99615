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
#include <span>
#include <vector>

namespace hpenet {

/// K x K counts; rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  /// Throws DataError for labels outside [0, K).
  void add(int truth, int prediction);
  void add(std::span<const int> truth, std::span<const int> prediction);

  std::size_t classes() const noexcept { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t prediction) const {
    return counts_[truth * k_ + prediction];
  }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t col_sum(std::size_t c) const;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct Metrics {
  double oa = 0.0;
  double macc = 0.0;
  double miou = 0.0;
};

/// OA = trace / total; mAcc averages diag / row over classes present in the
/// ground truth; mIoU averages diag / (row + col - diag) over classes present
/// in the ground truth or the predictions. Throws UsageError when empty.
Metrics compute_metrics(const ConfusionMatrix& cm);

/// Index of the largest entry of each row of a rows x cols buffer (lowest
/// index on ties).
std::vector<int> argmax_rows(std::span<const double> values, std::size_t cols);

}  // namespace hpenet
