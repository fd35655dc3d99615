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

#include <cstdint>
#include <string>
#include <vector>

#include "hpenet/network.hpp"
#include "hpenet/optim.hpp"
#include "hpenet/tensor.hpp"

namespace hpenet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedBlob {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// Full training state. `tensors` covers every registry entry, buffers
/// included; the moment lists follow the optimizer's parameter order and
/// carry the parameter names.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_json;
  std::string training_json;
  std::uint64_t epoch = 0;
  std::string rng_state;
  std::uint64_t optimizer_step = 0;
  std::vector<NamedBlob> tensors;
  std::vector<NamedBlob> first_moments;
  std::vector<NamedBlob> second_moments;
};

/// Writes atomically (temporary file, then rename).
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Throws ParseError with the byte offset on corrupt or truncated input and
/// on a version mismatch.
Checkpoint load_checkpoint(const std::string& path);

/// Throws ConfigError naming the first key whose value differs.
void check_config(const NetworkConfig& expected, const Checkpoint& ckpt);

/// Snapshot of the registry (and optionally the optimizer).
Checkpoint capture_state(const Network& model, const AdamW* optimizer);

/// Copies tensors (and moments when `optimizer` is given) into place.
/// Validates every name and shape before touching any value; throws
/// ConfigError naming the offending tensor.
void restore_state(Network& model, AdamW* optimizer, const Checkpoint& ckpt);

}  // namespace hpenet
