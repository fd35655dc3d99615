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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hpenet/error.hpp"
#include "hpenet/network.hpp"
#include "test_support.hpp"

namespace hpenet {
namespace {

InputBatch random_batch(std::size_t batch, std::size_t points, std::uint64_t seed,
                        std::size_t extra = 0) {
  InputBatch in;
  in.batch = batch;
  in.points = points;
  in.positions = testing::random_points(batch * points, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> n;
  for (std::size_t i = 0; i < batch * points * extra; ++i) in.features.push_back(n(rng));
  in.shape_categories.assign(batch, 0);
  return in;
}

// Compact configs that keep the tests fast.
NetworkConfig small(Task task, std::array<std::size_t, 4> depths = {1, 1, 1, 1}) {
  NetworkConfig c = NetworkConfig::preset("s", task);
  c.embed_dim = 8;
  c.ref_depths = depths;
  c.k_abs = 6;
  c.k_ref = 4;
  c.num_classes = 3;
  if (task == Task::segment) c.downsample_ratio = 2;
  return c;
}

std::vector<double> values_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

Tensor run(Network& net, const InputBatch& in, NormMode mode = NormMode::eval,
           ForwardStats* stats = nullptr) {
  Graph g(false);
  ForwardContext ctx{g, mode};
  Tensor out = net.forward(ctx, in);
  if (stats) *stats = ctx.stats;
  return out;
}

TEST(NetworkConfig, PresetWidthsAndDepths) {
  struct Row {
    const char* name;
    std::size_t embed;
    std::array<std::size_t, 4> depths;
  };
  for (const Row& r : {Row{"s", 32, {0, 0, 0, 0}}, Row{"b", 32, {1, 2, 1, 1}},
                       Row{"l", 32, {2, 4, 2, 2}}, Row{"XL", 64, {3, 6, 3, 3}}}) {
    NetworkConfig c = NetworkConfig::preset(r.name, Task::segment);
    EXPECT_EQ(c.embed_dim, r.embed) << r.name;
    EXPECT_EQ(c.ref_depths, r.depths) << r.name;
  }
  EXPECT_THROW(NetworkConfig::preset("m"), ConfigError);
  EXPECT_EQ(NetworkConfig::preset("s", Task::segment).stage_count(), 4u);
  EXPECT_EQ(NetworkConfig::preset("s", Task::classify).stage_count(), 2u);
  EXPECT_EQ(NetworkConfig::preset("s", Task::partseg).stage_count(), 2u);
  EXPECT_EQ(NetworkConfig::preset("s", Task::segment).min_points(), 256u);
  EXPECT_EQ(NetworkConfig::preset("xl").level_width(2), 256u);
}

TEST(Network, PresetStageModuleCounts) {
  Network s(NetworkConfig::preset("s", Task::segment), 1);
  EXPECT_EQ(s.ref_block_count(), 0u);
  Network xl(NetworkConfig::preset("xl", Task::segment), 1);
  ASSERT_EQ(xl.ref_stages().size(), 4u);
  const std::size_t want[] = {3, 6, 3, 3};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(xl.ref_stages()[i].depth(), want[i]);
  EXPECT_EQ(xl.decoders().size(), 4u);
  Network cls(NetworkConfig::preset("b", Task::classify), 1);
  ASSERT_EQ(cls.ref_stages().size(), 2u);
  EXPECT_EQ(cls.ref_stages()[0].depth(), 1u);
  EXPECT_EQ(cls.ref_stages()[1].depth(), 2u);
}

TEST(Network, PresetSBuildsNoRefTables) {
  Network net(NetworkConfig::preset("s", Task::classify), 2);
  ForwardStats stats;
  run(net, random_batch(2, 64, 3), NormMode::train, &stats);
  EXPECT_EQ(stats.ref_tables_built, 0u);
  EXPECT_EQ(stats.abs_tables_built, 2u);
  Network b(small(Task::classify, {2, 1, 0, 0}), 2);
  run(b, random_batch(2, 64, 3), NormMode::train, &stats);
  EXPECT_EQ(stats.ref_tables_built, 2u);
  EXPECT_EQ(stats.ref_codes_built, 2u);
  EXPECT_EQ(stats.ref_code_reuses, 1u);
}

TEST(Network, EqualSeedsGiveBitIdenticalParameters) {
  Network a(small(Task::segment), 42);
  Network b(small(Task::segment), 42);
  Network c(small(Task::segment), 43);
  const auto& ea = a.params().entries();
  const auto& eb = b.params().entries();
  ASSERT_EQ(ea.size(), eb.size());
  bool any_difference = false;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    EXPECT_EQ(ea[i].name, eb[i].name);
    EXPECT_EQ(values_of(ea[i].tensor), values_of(eb[i].tensor)) << ea[i].name;
    any_difference |= values_of(ea[i].tensor) != values_of(c.params().entries()[i].tensor);
  }
  EXPECT_TRUE(any_difference);
  InputBatch in = random_batch(2, 64, 5);
  EXPECT_EQ(values_of(run(a, in, NormMode::train)), values_of(run(b, in, NormMode::train)));
}

TEST(Network, ParameterNamesAreUnique) {
  Network net(NetworkConfig::preset("b", Task::partseg), 1);
  std::vector<std::string> names;
  for (const auto& e : net.params().entries()) names.push_back(e.name);
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
  EXPECT_NE(net.params().find("class_embedding.table"), nullptr);
  EXPECT_NE(net.params().find("stage2.ref.block1.contract.weight"), nullptr);
}

TEST(Network, OutputShapes) {
  Network seg(small(Task::segment), 1);
  EXPECT_EQ(run(seg, random_batch(2, 48, 1)).shape(), (Shape{96, 3}));
  Network cls(small(Task::classify), 1);
  EXPECT_EQ(run(cls, random_batch(3, 40, 1)).shape(), (Shape{3, 3}));
  NetworkConfig pc = small(Task::partseg);
  pc.num_shape_categories = 2;
  pc.input_features = 2;
  Network part(pc, 1);
  EXPECT_EQ(part.params().find("class_embedding.table")->tensor.shape(), (Shape{2, 64}));
  InputBatch in = random_batch(2, 32, 1, 2);
  EXPECT_EQ(run(part, in).shape(), (Shape{64, 3}));
  Tensor before = run(part, in);
  in.shape_categories = {1, 0};
  EXPECT_NE(values_of(run(part, in)), values_of(before));
  in.shape_categories = {2, 0};
  EXPECT_THROW(run(part, in), DataError);
}

TEST(Network, TooFewPointsNamesTheMinimum) {
  Network seg(NetworkConfig::preset("s", Task::segment), 1);
  try {
    run(seg, random_batch(1, 200, 1));
    FAIL() << "expected SizeError";
  } catch (const SizeError& e) {
    EXPECT_NE(std::string(e.what()).find("256"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(run(seg, random_batch(1, 256, 1)));
}

TEST(Network, PointPermutationPermutesLogits) {
  for (Task task : {Task::classify, Task::segment}) {
    Network net(small(task), 7);
    InputBatch in = random_batch(1, 64, 8);
    std::vector<std::size_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
    InputBatch shuffled = in;
    for (std::size_t i = 0; i < 64; ++i) shuffled.positions[i] = in.positions[perm[i]];
    Tensor a = run(net, in);
    Tensor b = run(net, shuffled);
    if (task == Task::classify) {
      // Max pooling and order-free sampling: exact.
      EXPECT_EQ(values_of(a), values_of(b));
    } else {
      for (std::size_t i = 0; i < 64; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
          EXPECT_NEAR(b.values()[i * 3 + c], a.values()[perm[i] * 3 + c], 1e-9);
        }
      }
    }
  }
}

TEST(Network, TranslationLeavesLogitsUnchangedInRelativeMode) {
  for (Task task : {Task::classify, Task::segment}) {
    InputBatch in = random_batch(2, 64, 11);
    InputBatch moved = in;
    for (auto& p : moved.positions) p = {p[0] + 1.0, p[1] + 1.0, p[2] + 1.0};
    Network rel(small(task), 3);
    for (NormMode mode : {NormMode::train, NormMode::eval}) {
      Tensor a = run(rel, in, mode);
      Tensor b = run(rel, moved, mode);
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-9);
    }

    // Batch statistics in the lift cancel a global shift of absolute
    // coordinates, so the witness runs on running statistics.
    NetworkConfig abs_cfg = small(task);
    abs_cfg.encoding.coordinates = CoordinateMode::absolute;
    Network absolute(abs_cfg, 3);
    Tensor c = run(absolute, in);
    Tensor d = run(absolute, moved);
    double diff = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      diff = std::max(diff, std::abs(c.values()[i] - d.values()[i]));
    }
    EXPECT_GT(diff, 1e-3) << to_string(task);
  }
}

TEST(Network, EndToEndGradientsMatchFiniteDifferences) {
  for (Task task : {Task::classify, Task::segment}) {
    NetworkConfig cfg = small(task, {0, 0, 0, 0});
    Network net(cfg, 13);
    // Give zero-initialized layers weight so every parameter carries gradient.
    for (auto& e : net.params().entries()) {
      if (e.name.find(".contract.weight") != std::string::npos ||
          e.name.find(".project.weight") != std::string::npos) {
        Tensor w = testing::random_tensor(e.tensor.shape(), 17, false, 0.2);
        Tensor t = e.tensor;
        std::copy(w.values().begin(), w.values().end(), t.values().begin());
      }
    }
    const std::size_t batch = task == Task::classify ? 2 : 1;
    InputBatch in = random_batch(batch, 64, 14);
    const std::size_t rows = task == Task::classify ? 2 : 64;
    std::vector<std::pair<std::string, Tensor>> params;
    for (const auto& e : net.params().entries()) {
      if (e.learnable) params.push_back({e.name, e.tensor});
    }
    // A fixed random probe rather than a mean loss keeps the smallest
    // gradients above the finite-difference noise floor.
    Tensor probe = testing::random_tensor({rows, 3}, 15, false);
    // Running statistics keep biases ahead of norms from cancelling out.
    auto res = testing::check_gradients(
        [&](Graph& g) {
          ForwardContext ctx{g, NormMode::eval};
          Tensor logits = net.forward(ctx, in);
          return sum(g, mul(g, logits, probe));
        },
        params, 1e-6, 24);
    EXPECT_LT(res.max_error, 1e-4) << to_string(task) << " worst " << res.worst;
    EXPECT_GT(res.entries, params.size());
  }
}

TEST(Network, CostMatchesRegistry) {
  for (const char* p : {"s", "b"}) {
    for (Task task : {Task::classify, Task::segment, Task::partseg}) {
      Network net(NetworkConfig::preset(p, task), 1);
      CostReport r = net.cost(1024);
      EXPECT_EQ(r.total_params(), net.params().learnable_scalars()) << p << to_string(task);
      EXPECT_GT(r.stage_flops("stage1"), 0u);
      EXPECT_GT(r.stage_params("embed"), 0u);
    }
  }
}

TEST(NetworkConfig, SetAndSerializeRoundTrip) {
  NetworkConfig c = NetworkConfig::preset("b", Task::segment);
  c.set("encoding.kind", "pe_mlp");
  c.set("encoding.ratio", "1/8");
  c.set("aggregation.placement", "preconv/proconv/preconv");
  c.set("ref_depths", "2,0,1,3");
  c.set("fps_start", "first");
  EXPECT_EQ(c.encoding.kind, EncodingKind::pe_mlp);
  EXPECT_EQ(c.encoding.hidden_ratio, 0.125);
  EXPECT_EQ(c.abs_first, AggregationVariant::preconv);
  EXPECT_EQ(c.abs_rest, AggregationVariant::proconv);
  EXPECT_FALSE(c.lexicographic_fps_start);
  EXPECT_EQ(c.ref_depths, (std::array<std::size_t, 4>{2, 0, 1, 3}));

  NetworkConfig d = NetworkConfig::from_json(c.to_json());
  EXPECT_EQ(d.entries(), c.entries());
  NetworkConfig e;
  for (const auto& [k, v] : c.entries()) e.set(k, v);
  EXPECT_EQ(e.entries(), c.entries());

  NetworkConfig nested = NetworkConfig::from_json(
      R"({"task": "classify", "preset": "xl", "encoding": {"kind": "hpe_sin"}})");
  EXPECT_EQ(nested.embed_dim, 64u);
  EXPECT_EQ(nested.encoding.kind, EncodingKind::hpe_sin);

  EXPECT_THROW(c.set("encoding.colour", "red"), ConfigError);
  EXPECT_THROW(c.set("k_abs", "many"), ConfigError);
  EXPECT_THROW(NetworkConfig::from_json("{"), ConfigError);
}

TEST(NetworkConfig, ValidationRejectsInconsistentSettings) {
  NetworkConfig c;
  c.embed_dim = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = NetworkConfig{};
  c.num_classes = 0;
  EXPECT_THROW(Network(c, 1), ConfigError);
  c = NetworkConfig{};
  c.abs_stages = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = NetworkConfig{};
  c.encoding.kind = EncodingKind::hpe_sin;
  c.embed_dim = 4;
  EXPECT_THROW(Network(c, 1), ConfigError);
}

}  // namespace
}  // namespace hpenet
