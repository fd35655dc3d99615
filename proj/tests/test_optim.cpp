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

#include <cmath>
#include <numbers>

#include "hpenet/error.hpp"
#include "hpenet/ops.hpp"
#include "hpenet/optim.hpp"

namespace hpenet {
namespace {

TEST(AdamW, FirstStepMatchesHandComputation) {
  Tensor p({2}, std::vector<double>{1.0, -2.0}, true);
  Tensor q({1}, std::vector<double>{1.0}, true);
  AdamWOptions o;
  o.learning_rate = 0.1;
  o.weight_decay = 0.01;
  AdamW opt({{p, true}, {q, false}}, o);
  p.grad()[0] = 0.5;
  p.grad()[1] = -0.25;
  q.grad()[0] = 2.0;
  opt.step();
  // Bias-corrected moments equal g and g^2 after one step, so the update is
  // lr * g / (|g| + eps) on top of the decoupled decay.
  const double eps = o.epsilon;
  EXPECT_NEAR(p.values()[0], 1.0 * (1 - 0.001) - 0.1 * 0.5 / (0.5 + eps), 1e-15);
  EXPECT_NEAR(p.values()[1], -2.0 * (1 - 0.001) + 0.1 * 0.25 / (0.25 + eps), 1e-15);
  EXPECT_NEAR(q.values()[0], 1.0 - 0.1 * 2.0 / (2.0 + eps), 1e-15);
  EXPECT_EQ(opt.step_count(), 1u);
  EXPECT_EQ(p.grad()[0], 0.0);
}

TEST(AdamW, MomentBuffersMatchParameterShapes) {
  Tensor a({3, 2}, 0.0, true);
  Tensor b({4}, 0.0, true);
  AdamW opt({{a, true}, {b, true}}, {});
  ASSERT_EQ(opt.first_moments().size(), 2u);
  EXPECT_EQ(opt.first_moments()[0].size(), 6u);
  EXPECT_EQ(opt.second_moments()[1].size(), 4u);
}

TEST(AdamW, StepCounterIncrementsByOne) {
  Tensor a({1}, 0.0, true);
  AdamW opt({{a, true}}, {});
  for (int i = 1; i <= 3; ++i) {
    a.grad()[0] = 1.0;
    opt.step();
    EXPECT_EQ(opt.step_count(), static_cast<std::uint64_t>(i));
  }
}

TEST(AdamW, MissingGradientIsUsageError) {
  Tensor a({1}, 0.0, true);
  AdamW opt({{a, true}}, {});
  EXPECT_THROW(opt.step(), UsageError);
}

TEST(AdamW, MinimizesQuadratic) {
  Tensor x({2}, std::vector<double>{3.0, -4.0}, true);
  AdamWOptions o;
  o.learning_rate = 0.05;
  AdamW opt({{x, true}}, o);
  for (int i = 0; i < 2000; ++i) {
    Graph g;
    g.backward(sum(g, mul(g, x, x)));
    opt.step();
  }
  EXPECT_NEAR(x.values()[0], 0.0, 1e-3);
  EXPECT_NEAR(x.values()[1], 0.0, 1e-3);
}

TEST(AdamW, RestoreRejectsMismatchedBuffers) {
  Tensor a({2}, 0.0, true);
  AdamW opt({{a, true}}, {});
  EXPECT_THROW(opt.restore(1, {{0.0}}, {{0.0, 0.0}}), DataError);
}

TEST(CosineSchedule, EndpointsAndMidpoint) {
  EXPECT_DOUBLE_EQ(cosine_learning_rate(0.1, 0, 10), 0.1);
  EXPECT_NEAR(cosine_learning_rate(0.1, 5, 10), 0.05, 1e-15);
  EXPECT_NEAR(cosine_learning_rate(0.1, 10, 10), 0.0, 1e-15);
  EXPECT_NEAR(cosine_learning_rate(2.0, 1, 4),
              0.5 * 2.0 * (1.0 + std::cos(std::numbers::pi / 4.0)), 1e-15);
}

}  // namespace
}  // namespace hpenet
