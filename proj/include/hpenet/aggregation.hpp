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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpenet/encoding.hpp"
#include "hpenet/geometry.hpp"
#include "hpenet/module.hpp"

namespace hpenet {

// Where the set operation S sits relative to grouping G and reduction R:
//   conv      R(S(G(f) ++ offsets))
//   conv_star R(S(G(f)))
//   preconv   R(G(S(f)))
//   proconv   S(R(G(f)))
enum class AggregationVariant { conv, conv_star, preconv, proconv };

std::string_view to_string(AggregationVariant variant);
AggregationVariant parse_aggregation_variant(std::string_view text);

struct AggregationConfig {
  AggregationVariant variant = AggregationVariant::preconv;
  std::vector<std::size_t> mlp_widths;
  bool use_encoding = true;
  bool concat_offsets = false;
  /// Normalization inside each MLP layer; off gives plain linear + relu.
  bool mlp_norm = true;

  /// Config with concat_offsets set as the variant implies.
  static AggregationConfig make(AggregationVariant variant,
                                std::vector<std::size_t> widths,
                                bool use_encoding = true);

  void validate() const;
};

/// Closed-form multiply-accumulate count of the set operation S for L layers
/// of width C: preconv C*C*N_in*L, conv C*C*N_out*k*L, proconv C*C*N_out*L.
/// conv_star counts as conv.
std::uint64_t flop_count(AggregationVariant variant, std::uint64_t n_in,
                         std::uint64_t n_out, std::uint64_t k, std::uint64_t c,
                         std::uint64_t layers);

/// One local aggregation with its own MLP stack.
class LocalAggregation {
 public:
  LocalAggregation(const AggregationConfig& config, std::size_t in_channels,
                   ParamRegistry& registry, const std::string& name, Rng& rng);

  /// `source` is S x C_in. `neighbors` holds M*k row indices into source.
  /// `offsets` (M*k*3) is read only when offsets are concatenated. `codes`,
  /// when defined, is M x k x code_width() and fused before the reduction.
  /// Returns M x out_channels().
  Tensor forward(ForwardContext& ctx, const Tensor& source,
                 std::span<const std::size_t> neighbors, std::size_t k,
                 std::span<const double> offsets, const Tensor& codes,
                 FusionMode fusion = FusionMode::add);

  /// PointSet front end: features of `source`, offsets from `table`.
  Tensor forward(ForwardContext& ctx, const PointSet& query,
                 const PointSet& source, const NeighborTable& table,
                 const Tensor& codes = {}, FusionMode fusion = FusionMode::add);

  /// Channels of the positional codes this variant fuses.
  std::size_t code_width() const;
  std::size_t in_channels() const noexcept { return in_channels_; }
  std::size_t out_channels() const { return mlp_.out_channels(); }
  const AggregationConfig& config() const noexcept { return config_; }
  DenseStack& mlp() noexcept { return mlp_; }

  /// Adds the MLP cost for n_in source points, n_out centroids and k.
  void account(CostReport& report, const std::string& stage, std::uint64_t n_in,
               std::uint64_t n_out, std::uint64_t k) const;
  std::uint64_t param_count() const;

 private:
  AggregationConfig config_;
  std::size_t in_channels_;
  DenseStack mlp_;
};

}  // namespace hpenet
