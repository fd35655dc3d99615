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

#include <filesystem>
#include <numeric>
#include <sstream>

#include "hpenet/error.hpp"
#include "hpenet/trainer.hpp"

namespace hpenet {
namespace {

namespace fs = std::filesystem;

SyntheticDataset toy(std::vector<ShapeFamily> families, std::size_t samples,
                     std::size_t points, double test_fraction = 0.25) {
  DatasetSpec spec;
  spec.families = std::move(families);
  spec.samples = samples;
  spec.points_per_cloud = points;
  spec.test_fraction = test_fraction;
  spec.seed = 3;
  return generate_dataset(spec);
}

NetworkConfig small(Task task, const SyntheticDataset& data) {
  NetworkConfig c = NetworkConfig::preset("s", task);
  c.embed_dim = 8;
  c.k_abs = 8;
  c.k_ref = 4;
  if (task == Task::segment) c.downsample_ratio = 2;
  fit_config_to_dataset(c, data);
  return c;
}

TrainOptions quick(std::size_t epochs) {
  TrainOptions o;
  o.epochs = epochs;
  o.batch_size = 4;
  o.seed = 11;
  return o;
}

std::string csv_of(const std::vector<EpochRecord>& records) {
  std::string out = epoch_csv_header();
  for (const auto& r : records) out += epoch_csv_row(r) + "\n";
  return out;
}

std::vector<std::vector<double>> snapshot(Network& net) {
  std::vector<std::vector<double>> out;
  for (const auto& e : net.params().entries()) {
    auto v = e.tensor.values();
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

TEST(Trainer, OneEpochEmitsOneRow) {
  SyntheticDataset data = toy({ShapeFamily::sphere, ShapeFamily::cube}, 4, 64, 0.0);
  Trainer t(small(Task::classify, data), quick(1), data);
  std::size_t seen = 0;
  auto records = t.run([&](const EpochRecord&) { ++seen; });
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(seen, 1u);
  EXPECT_FALSE(records[0].has_test);
  const std::string row = epoch_csv_row(records[0]);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 8);
  EXPECT_EQ(row.rfind("1,", 0), 0u);
  EXPECT_EQ(epoch_csv_header(),
            "epoch,lr,train_loss,train_oa,train_macc,train_miou,test_oa,test_macc,test_miou\n");
  EXPECT_EQ(t.epoch(), 1u);
}

TEST(Trainer, LossFallsOnSeparableToy) {
  SyntheticDataset data = toy({ShapeFamily::sphere, ShapeFamily::cube}, 16, 64, 0.0);
  TrainOptions o = quick(20);
  Trainer t(small(Task::classify, data), o, data);
  auto records = t.run();
  ASSERT_EQ(records.size(), 20u);
  double previous = 1e300;
  for (std::size_t w = 0; w < 4; ++w) {
    double mean = 0.0;
    for (std::size_t e = 0; e < 5; ++e) mean += records[w * 5 + e].train_loss;
    mean /= 5;
    EXPECT_LT(mean, previous) << "window " << w;
    previous = mean;
  }
}

TEST(Trainer, IdenticalSeedsGiveIdenticalCsv) {
  SyntheticDataset data = toy({ShapeFamily::cylinder}, 8, 32);
  NetworkConfig c = small(Task::segment, data);
  Trainer a(c, quick(2), data);
  Trainer b(c, quick(2), data);
  EXPECT_EQ(csv_of(a.run()), csv_of(b.run()));
  auto sa = snapshot(a.network()), sb = snapshot(b.network());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i], sb[i]) << a.network().params().entries()[i].name;
  }
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  SyntheticDataset data = toy({ShapeFamily::sphere, ShapeFamily::cube, ShapeFamily::cylinder},
                              12, 64);
  NetworkConfig c = small(Task::classify, data);
  TrainOptions o = quick(4);
  o.augment = true;
  Trainer full(c, o, data);
  const auto all = full.run();

  TrainOptions half = o;
  half.epochs = 2;
  half.schedule_epochs = 4;
  TrainOptions whole = o;
  whole.schedule_epochs = 4;
  Trainer reference(c, whole, data);
  const auto ref_records = reference.run();

  Trainer first(c, half, data);
  auto head = first.run();
  const fs::path p = fs::temp_directory_path() / "hpenet_trainer_resume.bin";
  save_checkpoint(first.checkpoint(), p.string());
  Trainer second(c, quick(4), data);
  second.restore(load_checkpoint(p.string()));
  fs::remove(p);
  EXPECT_EQ(second.epoch(), 2u);
  EXPECT_TRUE(second.options().augment);
  auto tail = second.run();
  head.insert(head.end(), tail.begin(), tail.end());
  EXPECT_EQ(csv_of(head), csv_of(ref_records));
  EXPECT_EQ(snapshot(second.network()), snapshot(reference.network()));
  EXPECT_EQ(all.size(), 4u);
}

TEST(Trainer, RestoreRejectsOtherConfig) {
  SyntheticDataset data = toy({ShapeFamily::sphere, ShapeFamily::cube}, 4, 64);
  NetworkConfig c = small(Task::classify, data);
  Trainer a(c, quick(1), data);
  a.run();
  c.embed_dim = 16;
  Trainer b(c, quick(1), data);
  EXPECT_THROW(b.restore(a.checkpoint()), ConfigError);
}

TEST(Trainer, NonFiniteLossNamesTheTensor) {
  SyntheticDataset data = toy({ShapeFamily::sphere, ShapeFamily::cube}, 4, 64, 0.0);
  Trainer t(small(Task::classify, data), quick(1), data);
  Tensor w = t.network().params().find("embed.weight")->tensor;
  w.values()[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    t.run();
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("first non-finite tensor: linear"), std::string::npos)
        << e.what();
  }
}

TEST(Trainer, EarlyStopHaltsOnceBothMetricsReachTargets) {
  SyntheticDataset data = toy({ShapeFamily::sphere, ShapeFamily::cube}, 8, 64);
  TrainOptions o = quick(5);
  o.stop_train_metric = 0.0;
  o.stop_test_metric = 0.0;
  Trainer t(small(Task::classify, data), o, data);
  EXPECT_EQ(t.run().size(), 1u);
}

TEST(Trainer, RejectsMismatchedData) {
  SyntheticDataset data = toy({ShapeFamily::sphere, ShapeFamily::cube, ShapeFamily::cylinder},
                              6, 64);
  NetworkConfig c = small(Task::classify, data);
  c.num_classes = 2;
  EXPECT_THROW(Trainer(c, quick(1), data), DataError);
  SyntheticDataset few = toy({ShapeFamily::sphere}, 4, 8);
  EXPECT_THROW(Trainer(small(Task::classify, few), quick(1), few), SizeError);
  TrainOptions zero = quick(1);
  zero.batch_size = 0;
  EXPECT_THROW(Trainer(small(Task::classify, data), zero, data), ConfigError);
}

TEST(Trainer, BatchesFollowTheTask) {
  SyntheticDataset data = toy({ShapeFamily::cylinder, ShapeFamily::torus}, 4, 32);
  const std::vector<std::size_t> idx{1, 2};
  LabeledBatch cls = make_batch(data, Task::classify, idx);
  EXPECT_EQ(cls.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(cls.input.positions.size(), 64u);
  LabeledBatch seg = make_batch(data, Task::partseg, idx);
  EXPECT_EQ(seg.labels.size(), 64u);
  EXPECT_EQ(seg.input.shape_categories, (std::vector<int>{1, 0}));
  EXPECT_EQ(seg.labels[0], data.samples[1].part_labels[0]);
  EXPECT_EQ(seg.input.positions[32], data.samples[2].positions[0]);

  NetworkConfig c = NetworkConfig::preset("s", Task::partseg);
  fit_config_to_dataset(c, data);
  EXPECT_EQ(c.num_classes, 4u);
  EXPECT_EQ(c.num_shape_categories, 2u);
}

TEST(TrainOptions, JsonRoundTrip) {
  TrainOptions o;
  o.epochs = 17;
  o.learning_rate = 3.5e-3;
  o.augment = true;
  o.stop_test_metric = 0.85;
  TrainOptions back = TrainOptions::from_json(o.to_json());
  EXPECT_EQ(back.to_json(), o.to_json());
  EXPECT_EQ(back.learning_rate, 3.5e-3);
  EXPECT_EQ(back.horizon(), 17u);
}

}  // namespace
}  // namespace hpenet
