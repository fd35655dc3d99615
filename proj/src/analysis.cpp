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

#include "hpenet/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "hpenet/error.hpp"

namespace hpenet {

CostReport count_params(const Network& model) {
  CostReport report = model.cost(model.config().min_points());
  report.points = 0;
  report.geometry_comparisons = 0;
  for (auto& item : report.items) item.flops = 0;
  return report;
}

CostReport count_flops(const Network& model, std::size_t points) {
  if (points < model.config().min_points()) {
    throw SizeError("cost requested for " + std::to_string(points) +
                    " points; the minimum is " +
                    std::to_string(model.config().min_points()));
  }
  return model.cost(points);
}

std::string BenchmarkResult::to_text() const {
  std::ostringstream os;
  os << "batch " << batch << ", points " << points << ", threads " << threads
     << ", repeats " << samples.size() << "\n";
  os << "throughput (instances/s): median " << median << ", mean " << mean
     << ", stddev " << stddev << "\n";
  return os.str();
}

BenchmarkResult benchmark_throughput(Network& model,
                                     const BenchmarkOptions& options) {
  if (options.repeats < 3) throw UsageError("benchmark needs at least 3 repeats");
  if (options.warmup < 1) throw UsageError("benchmark needs at least 1 warmup");
  if (options.batch == 0) throw UsageError("benchmark batch must be >= 1");

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  InputBatch input;
  input.batch = options.batch;
  input.points = options.points;
  input.positions.resize(options.batch * options.points);
  for (Vec3& p : input.positions) p = {u(rng), u(rng), u(rng)};
  input.features.resize(input.positions.size() * model.config().input_features);
  for (double& v : input.features) v = u(rng);
  input.shape_categories.assign(options.batch, 0);

  auto run_once = [&] {
    Graph graph(false);
    ForwardContext ctx{graph, NormMode::eval};
    (void)model.forward(ctx, input);
  };
  for (std::size_t i = 0; i < options.warmup; ++i) run_once();

  BenchmarkResult r;
  r.batch = options.batch;
  r.points = options.points;
  r.threads = 1;
  for (std::size_t i = 0; i < options.repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run_once();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    r.samples.push_back(static_cast<double>(options.batch) /
                        std::max(dt.count(), 1e-12));
  }
  std::vector<double> sorted = r.samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  r.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : sorted) var += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(var / static_cast<double>(n));
  return r;
}

}  // namespace hpenet
