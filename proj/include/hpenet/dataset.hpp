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
#include <string_view>
#include <vector>

#include "hpenet/geometry.hpp"

namespace hpenet {

enum class ShapeFamily { sphere, cube, cylinder, torus };

std::string_view to_string(ShapeFamily family);
ShapeFamily parse_shape_family(std::string_view text);
/// Surface regions with their own part label: cylinder caps/side, torus
/// inner/outer half, one for the rest.
std::size_t part_count(ShapeFamily family);

enum class PoseMode { none, vertical, full };

struct DatasetSpec {
  std::vector<ShapeFamily> families{ShapeFamily::sphere, ShapeFamily::cube,
                                    ShapeFamily::cylinder};
  std::size_t samples = 100;
  std::size_t points_per_cloud = 256;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// The last round(samples * test_fraction) indices form the test split.
  double test_fraction = 0.2;
  /// Random rotation (about z or uniform over SO(3)) with scale and shift.
  PoseMode pose = PoseMode::full;

  void validate() const;
};

/// One generated cloud. Positions hold float32-representable values.
struct Sample {
  std::vector<Vec3> positions;
  std::vector<int> part_labels;
  int cloud_label = 0;
  /// Shape category; equals cloud_label.
  int category = 0;
};

struct SyntheticDataset {
  DatasetSpec spec;
  std::vector<Sample> samples;
  std::size_t num_shape_classes = 0;
  std::size_t num_part_classes = 0;

  std::size_t test_count() const;
  std::size_t train_count() const { return samples.size() - test_count(); }
  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> test_indices() const;
};

/// Points on the canonical (unposed, noise-free) surface of one family with
/// family-local part labels, drawn area-uniformly. Free proportions
/// (cylinder radius and height, torus tube radius) are drawn from `seed`.
struct CanonicalShape {
  std::vector<Vec3> positions;
  std::vector<int> labels;
};
CanonicalShape sample_canonical(ShapeFamily family, std::size_t points,
                                std::uint64_t seed);

/// Deterministic given spec.seed; sample i draws from its own seed stream.
SyntheticDataset generate_dataset(const DatasetSpec& spec);

/// Versioned little-endian binary plus a `<path>.txt` summary.
void save_dataset(const SyntheticDataset& data, const std::string& path);
/// Throws ParseError with the byte offset on corrupt input.
SyntheticDataset load_dataset(const std::string& path);

}  // namespace hpenet
