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

#include "hpenet/aggregation.hpp"

#include "hpenet/error.hpp"

namespace hpenet {

std::string_view to_string(AggregationVariant variant) {
  switch (variant) {
    case AggregationVariant::conv: return "conv";
    case AggregationVariant::conv_star: return "conv_star";
    case AggregationVariant::preconv: return "preconv";
    case AggregationVariant::proconv: return "proconv";
  }
  return "preconv";
}

AggregationVariant parse_aggregation_variant(std::string_view text) {
  for (auto v : {AggregationVariant::conv, AggregationVariant::conv_star,
                 AggregationVariant::preconv, AggregationVariant::proconv}) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown aggregation variant '" + std::string(text) + "'");
}

AggregationConfig AggregationConfig::make(AggregationVariant variant,
                                          std::vector<std::size_t> widths,
                                          bool use_encoding) {
  AggregationConfig c;
  c.variant = variant;
  c.mlp_widths = std::move(widths);
  c.use_encoding = use_encoding;
  c.concat_offsets = variant == AggregationVariant::conv;
  return c;
}

void AggregationConfig::validate() const {
  if (mlp_widths.empty()) throw ConfigError("aggregation needs at least one MLP layer");
  for (std::size_t w : mlp_widths) {
    if (w == 0) throw ConfigError("aggregation MLP widths must be >= 1");
  }
  if (variant == AggregationVariant::conv_star && concat_offsets) {
    throw ConfigError("conv_star does not concatenate offsets");
  }
  if (concat_offsets && variant != AggregationVariant::conv) {
    throw ConfigError("only conv concatenates offsets");
  }
}

std::uint64_t flop_count(AggregationVariant variant, std::uint64_t n_in,
                         std::uint64_t n_out, std::uint64_t k, std::uint64_t c,
                         std::uint64_t layers) {
  switch (variant) {
    case AggregationVariant::preconv: return c * c * n_in * layers;
    case AggregationVariant::conv:
    case AggregationVariant::conv_star: return c * c * n_out * k * layers;
    case AggregationVariant::proconv: return c * c * n_out * layers;
  }
  return 0;
}

LocalAggregation::LocalAggregation(const AggregationConfig& config,
                                   std::size_t in_channels,
                                   ParamRegistry& registry,
                                   const std::string& name, Rng& rng)
    : config_(config), in_channels_(in_channels) {
  config_.validate();
  if (in_channels == 0) throw ConfigError("aggregation input width must be >= 1");
  std::size_t width = in_channels + (config_.concat_offsets ? 3 : 0);
  for (std::size_t i = 0; i < config_.mlp_widths.size(); ++i) {
    mlp_.layers.push_back(Dense::make(registry, name + ".mlp" + std::to_string(i),
                                      width, config_.mlp_widths[i], rng,
                                      config_.mlp_norm, true));
    width = config_.mlp_widths[i];
  }
}

std::size_t LocalAggregation::code_width() const {
  return config_.variant == AggregationVariant::preconv ? out_channels()
                                                        : in_channels_;
}

Tensor LocalAggregation::forward(ForwardContext& ctx, const Tensor& source,
                                 std::span<const std::size_t> neighbors,
                                 std::size_t k, std::span<const double> offsets,
                                 const Tensor& codes, FusionMode fusion) {
  Graph& g = ctx.graph;
  if (source.rank() != 2 || source.dim(1) != in_channels_) {
    throw DimensionError("aggregation expects source S x " +
                         std::to_string(in_channels_) + ", got " +
                         shape_string(source.shape()));
  }
  if (k == 0 || neighbors.size() % k != 0) {
    throw DimensionError("aggregation: neighbor list is not a multiple of k");
  }
  const std::size_t m = neighbors.size() / k;
  if (codes.defined()) {
    const Shape want{m, k, code_width()};
    if (codes.shape() != want) {
      throw DimensionError("aggregation codes " + shape_string(codes.shape()) +
                           " vs expected " + shape_string(want));
    }
  }
  auto fuse = [&](const Tensor& grouped) {
    return codes.defined() ? fuse_positional(g, grouped, codes, fusion) : grouped;
  };

  switch (config_.variant) {
    case AggregationVariant::preconv: {
      Tensor transformed = mlp_.forward(ctx, source);
      Tensor grouped = gather_rows(g, transformed, neighbors, {m, k});
      return reduce(g, fuse(grouped), 1, Reduction::max);
    }
    case AggregationVariant::proconv: {
      Tensor grouped = gather_rows(g, source, neighbors, {m, k});
      Tensor pooled = reduce(g, fuse(grouped), 1, Reduction::max);
      return mlp_.forward(ctx, pooled);
    }
    case AggregationVariant::conv:
    case AggregationVariant::conv_star: {
      Tensor grouped = fuse(gather_rows(g, source, neighbors, {m, k}));
      if (config_.concat_offsets) {
        if (offsets.size() != m * k * 3) {
          throw DimensionError("conv: expected " + std::to_string(m * k * 3) +
                               " offset values, got " +
                               std::to_string(offsets.size()));
        }
        Tensor off({m, k, 3}, std::vector<double>(offsets.begin(), offsets.end()));
        grouped = concat(g, {grouped, off}, 2);
      }
      return reduce(g, mlp_.forward(ctx, grouped), 1, Reduction::max);
    }
  }
  throw ConfigError("unhandled aggregation variant");
}

Tensor LocalAggregation::forward(ForwardContext& ctx, const PointSet& query,
                                 const PointSet& source,
                                 const NeighborTable& table, const Tensor& codes,
                                 FusionMode fusion) {
  if (source.channels != in_channels_) {
    throw DimensionError("aggregation expects " + std::to_string(in_channels_) +
                         " source channels, got " +
                         std::to_string(source.channels));
  }
  if (table.rows() != query.size()) {
    throw DimensionError("neighbor table has " + std::to_string(table.rows()) +
                         " rows for " + std::to_string(query.size()) +
                         " query points");
  }
  Tensor features({source.size(), source.channels}, source.features);
  std::vector<double> offsets;
  if (config_.concat_offsets) {
    offsets = relative_offsets(table, query.positions, source.positions);
  }
  return forward(ctx, features, table.neighbors, table.k, offsets, codes, fusion);
}

void LocalAggregation::account(CostReport& report, const std::string& stage,
                               std::uint64_t n_in, std::uint64_t n_out,
                               std::uint64_t k) const {
  std::uint64_t rows = 0;
  switch (config_.variant) {
    case AggregationVariant::preconv: rows = n_in; break;
    case AggregationVariant::proconv: rows = n_out; break;
    case AggregationVariant::conv:
    case AggregationVariant::conv_star: rows = n_out * k; break;
  }
  mlp_.account(report, stage, cost_kind::kAggregation, rows);
}

std::uint64_t LocalAggregation::param_count() const {
  std::uint64_t n = 0;
  for (const auto& layer : mlp_.layers) n += layer.param_count();
  return n;
}

}  // namespace hpenet
