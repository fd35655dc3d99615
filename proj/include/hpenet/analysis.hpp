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
#include <string>
#include <vector>

#include "hpenet/cost.hpp"
#include "hpenet/network.hpp"

namespace hpenet {

/// Parameter part of the cost report; FLOP entries are zero. The total
/// equals the number of learnable scalars in the model.
CostReport count_params(const Network& model);

/// Full report for one cloud of `points` points. Throws SizeError below the
/// network minimum.
CostReport count_flops(const Network& model, std::size_t points);

struct BenchmarkOptions {
  std::size_t batch = 1;
  std::size_t points = 1024;
  std::size_t repeats = 3;
  std::size_t warmup = 1;
  std::uint64_t seed = 0;
};

/// Instances per second over the timed repeats.
struct BenchmarkResult {
  std::size_t batch = 0;
  std::size_t points = 0;
  std::size_t threads = 1;
  std::vector<double> samples;
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;

  /// stddev / median.
  double jitter() const { return median > 0.0 ? stddev / median : 0.0; }
  std::string to_text() const;
};

/// Times eval-mode forward passes on random clouds. Throws UsageError when
/// repeats < 3 or warmup < 1.
BenchmarkResult benchmark_throughput(Network& model,
                                     const BenchmarkOptions& options);

}  // namespace hpenet
