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

#include "hpenet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "hpenet/error.hpp"
#include "json.hpp"

namespace hpenet {

std::string TrainOptions::to_json() const {
  nlohmann::ordered_json j;
  j["epochs"] = epochs;
  j["schedule_epochs"] = schedule_epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["weight_decay"] = weight_decay;
  j["label_smoothing"] = label_smoothing;
  j["seed"] = seed;
  j["augment"] = augment;
  j["jitter_sigma"] = jitter_sigma;
  j["stop_train_metric"] = stop_train_metric;
  j["stop_test_metric"] = stop_test_metric;
  return j.dump();
}

TrainOptions TrainOptions::from_json(const std::string& text) {
  TrainOptions o;
  try {
    const auto j = nlohmann::json::parse(text);
    o.epochs = j.value("epochs", o.epochs);
    o.schedule_epochs = j.value("schedule_epochs", o.schedule_epochs);
    o.batch_size = j.value("batch_size", o.batch_size);
    o.learning_rate = j.value("learning_rate", o.learning_rate);
    o.weight_decay = j.value("weight_decay", o.weight_decay);
    o.label_smoothing = j.value("label_smoothing", o.label_smoothing);
    o.seed = j.value("seed", o.seed);
    o.augment = j.value("augment", o.augment);
    o.jitter_sigma = j.value("jitter_sigma", o.jitter_sigma);
    o.stop_train_metric = j.value("stop_train_metric", o.stop_train_metric);
    o.stop_test_metric = j.value("stop_test_metric", o.stop_test_metric);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad training options: ") + e.what());
  }
  return o;
}

double EpochRecord::train_metric(Task task) const {
  return task == Task::classify ? train.oa : train.miou;
}

double EpochRecord::test_metric(Task task) const {
  return task == Task::classify ? test.oa : test.miou;
}

std::string epoch_csv_header() {
  return "epoch,lr,train_loss,train_oa,train_macc,train_miou,test_oa,test_macc,test_miou\n";
}

std::string epoch_csv_row(const EpochRecord& r) {
  char buf[256];
  if (r.has_test) {
    std::snprintf(buf, sizeof buf, "%zu,%.8g,%.8f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  r.epoch, r.learning_rate, r.train_loss, r.train.oa, r.train.macc,
                  r.train.miou, r.test.oa, r.test.macc, r.test.miou);
  } else {
    std::snprintf(buf, sizeof buf, "%zu,%.8g,%.8f,%.6f,%.6f,%.6f,,,\n", r.epoch,
                  r.learning_rate, r.train_loss, r.train.oa, r.train.macc,
                  r.train.miou);
  }
  return buf;
}

LabeledBatch make_batch(const SyntheticDataset& data, Task task,
                        std::span<const std::size_t> indices) {
  LabeledBatch b;
  b.input.batch = indices.size();
  b.input.points = data.spec.points_per_cloud;
  b.input.positions.reserve(indices.size() * b.input.points);
  for (std::size_t i : indices) {
    const Sample& s = data.samples.at(i);
    b.input.positions.insert(b.input.positions.end(), s.positions.begin(),
                             s.positions.end());
    b.input.shape_categories.push_back(s.category);
    if (task == Task::classify) {
      b.labels.push_back(s.cloud_label);
    } else {
      b.labels.insert(b.labels.end(), s.part_labels.begin(), s.part_labels.end());
    }
  }
  return b;
}

void fit_config_to_dataset(NetworkConfig& config, const SyntheticDataset& data) {
  if (config.task == Task::classify) {
    config.num_classes = std::max<std::size_t>(2, data.num_shape_classes);
  } else {
    config.num_classes = std::max<std::size_t>(2, data.num_part_classes);
  }
  config.num_shape_categories = std::max<std::size_t>(1, data.num_shape_classes);
}

Trainer::Trainer(const NetworkConfig& config, const TrainOptions& options,
                 const SyntheticDataset& data)
    : config_(config), options_(options), data_(data), rng_(options.seed) {
  if (options_.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (data_.train_count() == 0) throw DataError("dataset has no training samples");
  const std::size_t classes = config_.task == Task::classify ? data_.num_shape_classes
                                                             : data_.num_part_classes;
  if (classes > config_.num_classes) {
    throw DataError("dataset has " + std::to_string(classes) + " classes for task " +
                    std::string(to_string(config_.task)) + ", model predicts " +
                    std::to_string(config_.num_classes));
  }
  if (data_.spec.points_per_cloud < config_.min_points()) {
    throw SizeError("dataset clouds have " +
                    std::to_string(data_.spec.points_per_cloud) +
                    " points; the network needs at least " +
                    std::to_string(config_.min_points()));
  }
  network_ = std::make_unique<Network>(config_, options_.seed);
  AdamWOptions adam;
  adam.learning_rate = options_.learning_rate;
  adam.weight_decay = options_.weight_decay;
  optimizer_ = std::make_unique<AdamW>(network_->params().optimized(), adam);
}

EpochRecord Trainer::train_epoch() {
  const Task task = config_.task;
  EpochRecord rec;
  rec.epoch = epoch_ + 1;
  rec.learning_rate = cosine_learning_rate(options_.learning_rate, epoch_,
                                           options_.horizon());
  optimizer_->set_learning_rate(rec.learning_rate);

  std::vector<std::size_t> order = data_.train_indices();
  std::shuffle(order.begin(), order.end(), rng_);
  ConfusionMatrix cm(config_.num_classes);
  double loss_sum = 0.0;
  std::size_t loss_rows = 0;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, 1.0);

  for (std::size_t start = 0; start < order.size(); start += options_.batch_size) {
    const std::size_t end = std::min(order.size(), start + options_.batch_size);
    LabeledBatch batch =
        make_batch(data_, task, std::span(order).subspan(start, end - start));
    if (options_.augment) {
      for (std::size_t b = 0; b < batch.input.batch; ++b) {
        const double t = angle(rng_);
        const double c = std::cos(t), s = std::sin(t);
        for (std::size_t i = 0; i < batch.input.points; ++i) {
          Vec3& p = batch.input.positions[b * batch.input.points + i];
          const double x = c * p[0] - s * p[1];
          const double y = s * p[0] + c * p[1];
          p = {x + options_.jitter_sigma * jitter(rng_),
               y + options_.jitter_sigma * jitter(rng_),
               p[2] + options_.jitter_sigma * jitter(rng_)};
        }
      }
    }
    Graph graph;
    ForwardContext ctx{graph, NormMode::train};
    Tensor logits = network_->forward(ctx, batch.input);
    Tensor loss = cross_entropy_label_smoothed(graph, logits, batch.labels,
                                               options_.label_smoothing);
    if (!std::isfinite(loss.item())) {
      const auto culprit = graph.first_non_finite();
      throw NumericError("non-finite loss in epoch " + std::to_string(rec.epoch) +
                         "; first non-finite tensor: " +
                         culprit.value_or("none recorded (loss only)"));
    }
    graph.backward(loss);
    optimizer_->step();
    loss_sum += loss.item() * static_cast<double>(batch.labels.size());
    loss_rows += batch.labels.size();
    cm.add(batch.labels, argmax_rows(logits.values(), config_.num_classes));
  }
  rec.train_loss = loss_sum / static_cast<double>(loss_rows);
  rec.train = compute_metrics(cm);
  const auto test = data_.test_indices();
  if (!test.empty()) {
    rec.test = evaluate(test);
    rec.has_test = true;
  }
  ++epoch_;
  return rec;
}

std::vector<EpochRecord> Trainer::run(
    const std::function<void(const EpochRecord&)>& on_epoch) {
  std::vector<EpochRecord> out;
  while (epoch_ < options_.epochs) {
    EpochRecord rec = train_epoch();
    out.push_back(rec);
    if (on_epoch) on_epoch(rec);
    const bool stop_enabled = options_.stop_train_metric >= 0.0 ||
                              options_.stop_test_metric >= 0.0;
    if (stop_enabled && rec.train_metric(config_.task) >= options_.stop_train_metric &&
        (!rec.has_test || rec.test_metric(config_.task) >= options_.stop_test_metric)) {
      break;
    }
  }
  return out;
}

Metrics Trainer::evaluate(std::span<const std::size_t> indices) {
  ConfusionMatrix cm(config_.num_classes);
  for (std::size_t start = 0; start < indices.size(); start += options_.batch_size) {
    const std::size_t end = std::min(indices.size(), start + options_.batch_size);
    LabeledBatch batch = make_batch(data_, config_.task, indices.subspan(start, end - start));
    Graph graph(false);
    ForwardContext ctx{graph, NormMode::eval};
    Tensor logits = network_->forward(ctx, batch.input);
    cm.add(batch.labels, argmax_rows(logits.values(), config_.num_classes));
  }
  return compute_metrics(cm);
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c = capture_state(*network_, optimizer_.get());
  c.training_json = options_.to_json();
  c.epoch = epoch_;
  std::ostringstream os;
  os << rng_;
  c.rng_state = os.str();
  return c;
}

void Trainer::restore(const Checkpoint& ckpt) {
  check_config(config_, ckpt);
  const std::size_t target = options_.epochs;
  TrainOptions stored = TrainOptions::from_json(ckpt.training_json);
  stored.epochs = target;
  // The optimizer keeps its hyper-parameters from construction; rebuild it.
  options_ = stored;
  AdamWOptions adam;
  adam.learning_rate = options_.learning_rate;
  adam.weight_decay = options_.weight_decay;
  auto optimizer = std::make_unique<AdamW>(network_->params().optimized(), adam);
  restore_state(*network_, optimizer.get(), ckpt);
  optimizer_ = std::move(optimizer);
  std::istringstream is(ckpt.rng_state);
  std::mt19937_64 rng;
  is >> rng;
  if (!is) throw ConfigError("checkpoint RNG state is unreadable");
  rng_ = rng;
  epoch_ = ckpt.epoch;
}

}  // namespace hpenet
