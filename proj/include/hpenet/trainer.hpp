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
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hpenet/checkpoint.hpp"
#include "hpenet/dataset.hpp"
#include "hpenet/metrics.hpp"
#include "hpenet/network.hpp"
#include "hpenet/optim.hpp"

namespace hpenet {

struct TrainOptions {
  /// Epoch index to stop after (run() trains until this many are done).
  std::size_t epochs = 200;
  /// Cosine horizon; 0 means `epochs`.
  std::size_t schedule_epochs = 0;
  std::size_t batch_size = 8;
  double learning_rate = 2e-3;
  double weight_decay = 0.05;
  double label_smoothing = 0.2;
  std::uint64_t seed = 0;
  /// Rotation about z plus jitter on training batches.
  bool augment = false;
  double jitter_sigma = 0.01;
  /// Stop once the train and test metrics (OA for classify, mIoU otherwise)
  /// both reach these values; negative disables.
  double stop_train_metric = -1.0;
  double stop_test_metric = -1.0;

  std::size_t horizon() const { return schedule_epochs ? schedule_epochs : epochs; }
  std::string to_json() const;
  static TrainOptions from_json(const std::string& text);
};

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  Metrics train;
  Metrics test;
  bool has_test = false;

  /// Headline metric: OA for classification, mIoU for segmentation.
  double train_metric(Task task) const;
  double test_metric(Task task) const;
};

std::string epoch_csv_header();
std::string epoch_csv_row(const EpochRecord& record);

/// Assembles network inputs and labels for a list of sample indices.
struct LabeledBatch {
  InputBatch input;
  std::vector<int> labels;
};
LabeledBatch make_batch(const SyntheticDataset& data, Task task,
                        std::span<const std::size_t> indices);

class Trainer {
 public:
  /// Throws DataError when the dataset does not fit the task.
  Trainer(const NetworkConfig& config, const TrainOptions& options,
          const SyntheticDataset& data);

  /// Trains from the current epoch to options().epochs or an early stop.
  /// `on_epoch` sees every record as soon as it is produced.
  std::vector<EpochRecord> run(
      const std::function<void(const EpochRecord&)>& on_epoch = {});

  /// Eval-mode metrics over the given samples.
  Metrics evaluate(std::span<const std::size_t> indices);

  Checkpoint checkpoint() const;
  /// Continues from `ckpt`; training options come from the checkpoint
  /// except the epoch target. Throws ConfigError on any mismatch.
  void restore(const Checkpoint& ckpt);

  Network& network() noexcept { return *network_; }
  AdamW& optimizer() noexcept { return *optimizer_; }
  const TrainOptions& options() const noexcept { return options_; }
  TrainOptions& options() noexcept { return options_; }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  EpochRecord train_epoch();

  NetworkConfig config_;
  TrainOptions options_;
  const SyntheticDataset& data_;
  std::unique_ptr<Network> network_;
  std::unique_ptr<AdamW> optimizer_;
  std::mt19937_64 rng_;
  std::size_t epoch_ = 0;
};

/// Copies class counts from the dataset into `config` for its task.
void fit_config_to_dataset(NetworkConfig& config, const SyntheticDataset& data);

}  // namespace hpenet
