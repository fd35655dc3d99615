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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpenet/module.hpp"

namespace hpenet {

enum class EncodingKind { none, pe_sin, pe_mlp, hpe_sin, hpe_mlp };
enum class FusionMode { add, multiply };
enum class CoordinateMode { relative, absolute };

std::string_view to_string(EncodingKind kind);
std::string_view to_string(FusionMode mode);
std::string_view to_string(CoordinateMode mode);
EncodingKind parse_encoding_kind(std::string_view text);
FusionMode parse_fusion_mode(std::string_view text);
CoordinateMode parse_coordinate_mode(std::string_view text);

struct EncodingConfig {
  EncodingKind kind = EncodingKind::hpe_mlp;
  /// Width of the high-dimensional space as a fraction of output_dim.
  double hidden_ratio = 0.25;
  FusionMode fusion = FusionMode::add;
  CoordinateMode coordinates = CoordinateMode::relative;
  std::size_t output_dim = 0;
  /// Multiplies coordinates before the sinusoids; the 100 / 1000 constants
  /// assume unit-scale scenes.
  double rescale = 1.0;

  bool active() const noexcept { return kind != EncodingKind::none; }

  /// max(1, round(output_dim * hidden_ratio)).
  std::size_t hidden_dim() const;

  /// Channels fed to the output projection: 3 for pe_mlp, hidden_dim for
  /// hpe_mlp, floor(hidden_dim / 6) * 6 for hpe_sin.
  std::size_t projection_input_dim() const;

  /// Throws ConfigError when the combination is unusable.
  void validate() const;
};

/// floor(channels / 6) * 6.
std::size_t pe_sin_width(std::size_t channels);

/// Sinusoidal encoding of rows x 3 coordinates. For sub-group i and axis a,
/// entry 6i + 2a is sin(100 p_a / 1000^(6i / channels)) and 6i + 2a + 1 the
/// matching cosine. Returns rows x pe_sin_width(channels) values.
std::vector<double> pe_sin(std::span<const double> coords, std::size_t channels,
                           double rescale = 1.0);

/// Learnable (or fixed, for pe_sin) map from 3-D coordinates to codes of
/// output_dim channels.
class PositionalEncoder {
 public:
  PositionalEncoder(const EncodingConfig& config, ParamRegistry& registry,
                    const std::string& name, Rng& rng);

  /// `coords` holds rows x 3 values; the result has shape leading + [C].
  Tensor encode(ForwardContext& ctx, std::span<const double> coords,
                Shape leading);

  void account(CostReport& report, const std::string& stage,
               std::uint64_t rows) const;
  std::uint64_t param_count() const;

  const EncodingConfig& config() const noexcept { return config_; }
  // Exposed for tests that set weights by hand.
  std::optional<Dense>& lift() noexcept { return lift_; }
  std::optional<Linear>& projection() noexcept { return projection_; }

 private:
  EncodingConfig config_;
  std::optional<Dense> lift_;
  std::optional<Linear> projection_;
};

/// add: features + codes; multiply: features * codes.
Tensor fuse_positional(Graph& graph, const Tensor& features, const Tensor& codes,
                       FusionMode mode);

}  // namespace hpenet
