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

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hpenet/aggregation.hpp"
#include "hpenet/blocks.hpp"
#include "hpenet/cost.hpp"
#include "hpenet/encoding.hpp"
#include "hpenet/module.hpp"

namespace hpenet {

enum class Task { classify, segment, partseg };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

struct NetworkConfig {
  Task task = Task::classify;
  std::size_t embed_dim = 32;
  std::array<std::size_t, 4> ref_depths{0, 0, 0, 0};
  std::size_t num_classes = 3;
  std::size_t num_shape_categories = 1;
  /// Per-point channels beyond xyz.
  std::size_t input_features = 0;
  /// 0 selects the task default: 4 for segment, 2 otherwise.
  std::size_t abs_stages = 0;
  std::size_t k_abs = 24;
  std::size_t k_ref = 16;
  std::size_t downsample_ratio = 4;
  std::size_t abs_layers = 2;
  std::size_t ref_layers = 1;
  AggregationVariant abs_first = AggregationVariant::conv;
  AggregationVariant abs_rest = AggregationVariant::preconv;
  AggregationVariant ref = AggregationVariant::preconv;
  bool mlp_norm = true;
  EncodingConfig encoding{};
  std::size_t expansion = 4;
  /// 0 selects the deepest feature width.
  std::size_t head_hidden = 0;
  std::size_t class_embedding_dim = 64;
  bool lexicographic_fps_start = true;

  /// "s", "b", "l" or "xl" (case-insensitive) for the given task.
  static NetworkConfig preset(std::string_view name, Task task = Task::classify);

  std::size_t stage_count() const;
  /// Width of level i: embed_dim * 2^i.
  std::size_t level_width(std::size_t level) const;
  /// downsample_ratio ^ stage_count.
  std::size_t min_points() const;

  void validate() const;

  /// Applies one dotted-key override such as "encoding.kind=pe_mlp".
  void set(std::string_view key, std::string_view value);
  /// Flattened (key, value) pairs accepted back by set().
  std::vector<std::pair<std::string, std::string>> entries() const;

  std::string to_json() const;
  /// Accepts nested or dotted-key objects.
  static NetworkConfig from_json(std::string_view text);
};

/// Loads a JSON config file, starting from `base` and applying its keys.
NetworkConfig load_config_file(const std::string& path, NetworkConfig base);

/// A batch of equally sized clouds. Positions are cloud-major.
struct InputBatch {
  std::size_t batch = 0;
  std::size_t points = 0;
  std::vector<Vec3> positions;
  /// batch * points * input_features values, empty when there are none.
  std::vector<double> features;
  /// One shape category per cloud; partseg only.
  std::vector<int> shape_categories;
};

class Network {
 public:
  Network(const NetworkConfig& config, std::uint64_t seed);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  /// classify: batch x num_classes. segment / partseg: (batch * points) x
  /// num_classes with rows in input order.
  Tensor forward(ForwardContext& ctx, const InputBatch& input);

  /// Per-stage cost for one cloud of `points` points.
  CostReport cost(std::size_t points) const;

  const NetworkConfig& config() const noexcept { return config_; }
  ParamRegistry& params() noexcept { return registry_; }
  const ParamRegistry& params() const noexcept { return registry_; }

  std::vector<AbsStage>& abs_stages() noexcept { return abs_; }
  std::vector<RefStage>& ref_stages() noexcept { return ref_; }
  std::vector<DecoderStage>& decoders() noexcept { return decoders_; }
  std::size_t ref_block_count() const;

 private:
  StageState embed(ForwardContext& ctx, const InputBatch& input);

  NetworkConfig config_;
  ParamRegistry registry_;
  std::optional<Dense> embedding_;
  std::vector<AbsStage> abs_;
  std::vector<RefStage> ref_;
  std::vector<DecoderStage> decoders_;
  std::optional<Tensor> class_table_;
  std::vector<Dense> head_;
  std::optional<Linear> classifier_;
};

}  // namespace hpenet
