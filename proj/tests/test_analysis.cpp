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

#include <gtest/gtest.h>

#include "hpenet/analysis.hpp"
#include "hpenet/error.hpp"
#include "test_support.hpp"

namespace hpenet {
namespace {

using V = AggregationVariant;

NetworkConfig with(NetworkConfig c, const std::string& key, const std::string& value) {
  c.set(key, value);
  return c;
}

std::uint64_t stage_kind_flops(const CostReport& r, const std::string& stage,
                               const std::string& kind) {
  std::uint64_t n = 0;
  for (const auto& item : r.items) {
    if (item.stage == stage && item.kind == kind) n += item.flops;
  }
  return n;
}

TEST(CountParams, SingleLinear) {
  for (std::size_t c : {1u, 7u, 64u}) {
    ParamRegistry reg;
    Rng rng(0);
    Linear lin = Linear::make(reg, "l", c, c, rng);
    EXPECT_EQ(lin.param_count(), c * c + c);
    EXPECT_EQ(reg.learnable_scalars(), c * c + c);
  }
}

TEST(CountParams, TotalsEqualLearnableScalarsAndSumOfParts) {
  for (const char* p : {"s", "b", "l"}) {
    Network net(NetworkConfig::preset(p, Task::segment), 1);
    CostReport r = count_params(net);
    EXPECT_EQ(r.total_params(), net.params().learnable_scalars());
    EXPECT_EQ(r.total_flops(), 0u);
    std::uint64_t sum = 0;
    for (const auto& item : r.items) sum += item.params;
    EXPECT_EQ(sum, r.total_params());
    EXPECT_EQ(count_params(net).to_csv(), r.to_csv());
  }
}

TEST(CountParams, AggregationVariantsShareParameterBudget) {
  NetworkConfig base = NetworkConfig::preset("b", Task::classify);
  auto params_for = [&](const char* placement, bool encoded) {
    NetworkConfig c = with(base, "aggregation.placement", placement);
    if (!encoded) c.set("encoding.kind", "none");
    return count_params(Network(c, 1));
  };
  const char* same_width[] = {"preconv/preconv/preconv", "proconv/proconv/proconv",
                              "conv_star/conv_star/conv_star"};
  // Positional codes sit at the output width for preconv and the input
  // width otherwise, so only the aggregation bucket is compared with codes on.
  const CostReport pre = params_for(same_width[0], true);
  const CostReport pre_plain = params_for(same_width[0], false);
  for (const char* placement : same_width) {
    EXPECT_EQ(params_for(placement, true).kind_params(cost_kind::kAggregation),
              pre.kind_params(cost_kind::kAggregation)) << placement;
    EXPECT_EQ(params_for(placement, false).total_params(), pre_plain.total_params())
        << placement;
  }
  // Concatenated offsets add three inputs to the first layer of each conv.
  EXPECT_EQ(params_for("conv/preconv/preconv", false).total_params(),
            pre_plain.total_params() + 3 * base.level_width(1));
}

TEST(CountParams, HiddenRatioSweepIncreasesTotals) {
  std::uint64_t previous = 0;
  for (const char* ratio : {"1/8", "1/4", "1/2", "1"}) {
    NetworkConfig c = NetworkConfig::preset("b", Task::segment);
    c.set("encoding.ratio", ratio);
    const std::uint64_t n = count_params(Network(c, 1)).total_params();
    EXPECT_GT(n, previous) << ratio;
    previous = n;
  }
}

TEST(CountFlops, RefConvCostsKTimesPreconv) {
  NetworkConfig base = NetworkConfig::preset("b", Task::classify);
  const std::size_t n = 1024;
  NetworkConfig none = base;
  none.ref_depths = {0, 0, 0, 0};
  const std::uint64_t abs_only =
      count_flops(Network(none, 1), n).kind_flops(cost_kind::kAggregation);
  const std::uint64_t pre = count_flops(Network(with(base, "aggregation.ref", "preconv"), 1), n)
                                .kind_flops(cost_kind::kAggregation) - abs_only;
  const std::uint64_t conv = count_flops(Network(with(base, "aggregation.ref", "conv_star"), 1), n)
                                 .kind_flops(cost_kind::kAggregation) - abs_only;
  EXPECT_GT(pre, 0u);
  EXPECT_EQ(conv, base.k_ref * pre);
}

TEST(CountFlops, PerPointTermsScaleLinearly) {
  for (Task task : {Task::classify, Task::segment}) {
    Network net(NetworkConfig::preset("b", task), 1);
    CostReport a = count_flops(net, 1024);
    CostReport b = count_flops(net, 2048);
    for (const char* kind : {cost_kind::kEmbedding, cost_kind::kAggregation,
                             cost_kind::kEncoding, cost_kind::kRefMlp}) {
      EXPECT_EQ(b.kind_flops(kind), 2 * a.kind_flops(kind)) << kind;
    }
    EXPECT_EQ(a.total_params(), b.total_params());
  }
  EXPECT_THROW(count_flops(Network(NetworkConfig::preset("s", Task::segment), 1), 255),
               SizeError);
}

TEST(CountFlops, AbsOrderingConvPreconvProconv) {
  NetworkConfig base = NetworkConfig::preset("s", Task::classify);
  ASSERT_EQ(base.k_abs, 24u);
  ASSERT_EQ(base.downsample_ratio, 4u);
  std::uint64_t cost[3];
  const char* variants[] = {"conv_star", "preconv", "proconv"};
  for (int i = 0; i < 3; ++i) {
    Network net(with(base, "aggregation.abs_first", variants[i]), 1);
    cost[i] = stage_kind_flops(count_flops(net, 1024), "stage1", cost_kind::kAggregation);
  }
  EXPECT_GT(cost[0], cost[1]);
  EXPECT_GT(cost[1], cost[2]);
}

TEST(CountFlops, AnalyticLinearCostMatchesExecutedMacs) {
  for (const char* p : {"s", "b"}) {
    for (const char* placement : {"conv/preconv/preconv", "proconv/conv_star/preconv"}) {
      Network net(with(NetworkConfig::preset(p, Task::classify), "aggregation.placement",
                       placement), 1);
      CostReport r = count_flops(net, 256);
      InputBatch in;
      in.batch = 1;
      in.points = 256;
      in.positions = testing::random_points(256, 3);
      Graph g(false);
      ForwardContext ctx{g, NormMode::eval};
      net.forward(ctx, in);
      EXPECT_EQ(g.macs(), r.total_flops() - r.kind_flops(cost_kind::kNormAct))
          << p << " " << placement;
    }
  }
}

TEST(CountFlops, TotalsAreAdditive) {
  CostReport r = count_flops(Network(NetworkConfig::preset("b", Task::segment), 1), 1024);
  std::uint64_t by_stage = 0;
  std::vector<std::string> stages;
  for (const auto& item : r.items) {
    if (std::find(stages.begin(), stages.end(), item.stage) == stages.end()) {
      stages.push_back(item.stage);
      by_stage += r.stage_flops(item.stage);
    }
  }
  EXPECT_EQ(by_stage, r.total_flops());
  EXPECT_GT(r.geometry_comparisons, 0u);
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.rfind("stage,kind,params,flops\n", 0), 0u);
  EXPECT_NE(csv.find("total,all," + std::to_string(r.total_params()) + "," +
                     std::to_string(r.total_flops())),
            std::string::npos)
      << csv;
}

TEST(Benchmark, ReportsPositiveThroughput) {
  Network net(NetworkConfig::preset("s", Task::classify), 1);
  BenchmarkOptions opt;
  opt.points = 256;
  BenchmarkResult r = benchmark_throughput(net, opt);
  ASSERT_EQ(r.samples.size(), 3u);
  EXPECT_GT(r.median, 0.0);
  EXPECT_GE(r.stddev, 0.0);
  EXPECT_EQ(r.threads, 1u);
  EXPECT_NE(r.to_text().find("median"), std::string::npos);
  EXPECT_DOUBLE_EQ(r.jitter(), r.stddev / r.median);
  opt.repeats = 2;
  EXPECT_THROW(benchmark_throughput(net, opt), UsageError);
  opt.repeats = 3;
  opt.warmup = 0;
  EXPECT_THROW(benchmark_throughput(net, opt), UsageError);
}

TEST(Benchmark, SmallPresetOutrunsExtraLarge) {
  BenchmarkOptions opt;
  opt.points = 512;
  Network s(NetworkConfig::preset("s", Task::classify), 1);
  Network xl(NetworkConfig::preset("xl", Task::classify), 1);
  EXPECT_GT(benchmark_throughput(s, opt).median, benchmark_throughput(xl, opt).median);
}

}  // namespace
}  // namespace hpenet
