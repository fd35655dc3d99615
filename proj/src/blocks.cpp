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

#include "hpenet/blocks.hpp"

#include <numeric>

#include "hpenet/error.hpp"

namespace hpenet {

namespace {

struct Grouping {
  std::vector<std::size_t> neighbors;  // global row indices
  std::vector<double> offsets;         // p_j - p_m
  std::vector<double> coords;          // encoder input, relative or absolute
};

void append_grouping(Grouping& out, const NeighborTable& table,
                     std::span<const Vec3> query, std::span<const Vec3> source,
                     std::size_t row_base, bool absolute) {
  for (std::size_t idx : table.neighbors) out.neighbors.push_back(idx + row_base);
  std::vector<double> off = relative_offsets(table, query, source);
  if (absolute) {
    std::vector<double> pos = neighbor_positions(table, source);
    out.coords.insert(out.coords.end(), pos.begin(), pos.end());
  }
  out.offsets.insert(out.offsets.end(), off.begin(), off.end());
}

std::optional<PositionalEncoder> make_encoder(const StagePlan& plan,
                                              std::size_t code_width,
                                              ParamRegistry& registry,
                                              const std::string& name, Rng& rng) {
  if (!plan.aggregation.use_encoding || !plan.encoding.active()) return std::nullopt;
  EncodingConfig enc = plan.encoding;
  enc.output_dim = code_width;
  return PositionalEncoder(enc, registry, name, rng);
}

}  // namespace

std::vector<std::size_t> cloud_row_index(std::size_t batch, std::size_t points) {
  std::vector<std::size_t> idx(batch * points);
  for (std::size_t r = 0; r < idx.size(); ++r) idx[r] = r / points;
  return idx;
}

StageState StageState::from_point_set(const PointSet& set) {
  if (!set.has_features()) throw DimensionError("point set carries no features");
  StageState s;
  s.batch = 1;
  s.points = set.size();
  s.positions = set.positions;
  s.features = Tensor({set.size(), set.channels}, set.features);
  return s;
}

// ---------------------------------------------------------------- AbsStage

AbsStage::AbsStage(const StagePlan& plan, ParamRegistry& registry,
                   const std::string& name, Rng& rng)
    : plan_(plan),
      aggregation_(plan.aggregation, plan.in_channels, registry, name + ".agg", rng),
      encoder_(make_encoder(plan, aggregation_.code_width(), registry,
                            name + ".pe", rng)) {
  if (plan_.downsample_ratio == 0) throw ConfigError("downsample ratio must be >= 1");
  if (plan_.k == 0) throw ConfigError("ABS k must be >= 1");
  if (aggregation_.out_channels() != plan_.out_channels) {
    throw ConfigError(name + ": aggregation width " +
                      std::to_string(aggregation_.out_channels()) +
                      " differs from stage width " +
                      std::to_string(plan_.out_channels));
  }
}

std::size_t AbsStage::output_points(std::size_t n) const {
  return (n + plan_.downsample_ratio - 1) / plan_.downsample_ratio;
}

StageState AbsStage::forward(ForwardContext& ctx, const StageState& input) {
  const std::size_t n = input.points;
  const std::size_t m = output_points(n);
  const std::size_t k = plan_.k;
  const bool absolute = encoder_ && encoder_->config().coordinates ==
                                        CoordinateMode::absolute;
  StageState out;
  out.batch = input.batch;
  out.points = m;
  out.positions.reserve(input.batch * m);
  Grouping grouping;
  for (std::size_t b = 0; b < input.batch; ++b) {
    auto pos = input.cloud_positions(b);
    const std::size_t start = plan_.lexicographic_start ? lexicographic_min_index(pos) : 0;
    const std::vector<std::size_t> centroids = farthest_point_sample(pos, m, start);
    const NeighborTable table = knn_group_centroids(pos, centroids, k);
    std::vector<Vec3> query;
    query.reserve(m);
    for (std::size_t c : centroids) query.push_back(pos[c]);
    append_grouping(grouping, table, query, pos, b * n, absolute);
    out.positions.insert(out.positions.end(), query.begin(), query.end());
  }
  ++ctx.stats.abs_tables_built;

  Tensor codes;
  if (encoder_) {
    codes = encoder_->encode(ctx, absolute ? grouping.coords : grouping.offsets,
                             {input.batch * m, k});
  }
  const FusionMode fusion = encoder_ ? encoder_->config().fusion : FusionMode::add;
  out.features = aggregation_.forward(ctx, input.features, grouping.neighbors, k,
                                      grouping.offsets, codes, fusion);
  return out;
}

void AbsStage::account(CostReport& report, const std::string& stage,
                       std::uint64_t n_in) const {
  const std::uint64_t m = output_points(n_in);
  aggregation_.account(report, stage, n_in, m, plan_.k);
  if (encoder_) encoder_->account(report, stage, m * plan_.k);
  // FPS distance updates plus brute-force KNN.
  report.geometry_comparisons += n_in * m + m * n_in;
}

// ---------------------------------------------------------------- RefStage

Tensor RefBlock::forward(ForwardContext& ctx, const Tensor& x,
                         std::span<const std::size_t> neighbors, std::size_t k,
                         std::span<const double> offsets, const Tensor& codes,
                         FusionMode fusion) {
  Tensor pooled = aggregation.forward(ctx, x, neighbors, k, offsets, codes, fusion);
  Tensor h = contract.forward(ctx.graph, expand.forward(ctx, pooled));
  return add(ctx.graph, x, h);
}

void RefBlock::account(CostReport& report, const std::string& stage,
                       std::uint64_t n, std::uint64_t k) const {
  aggregation.account(report, stage, n, n, k);
  expand.account(report, stage, cost_kind::kRefMlp, n);
  report.add(stage, cost_kind::kRefMlp, contract.param_count(),
             n * contract.in * contract.out);
}

RefStage::RefStage(const StagePlan& plan, ParamRegistry& registry,
                   const std::string& name, Rng& rng)
    : plan_(plan) {
  if (plan_.in_channels != plan_.out_channels) {
    throw ConfigError(name + ": REF stages preserve width");
  }
  if (plan_.k == 0) throw ConfigError("REF k must be >= 1");
  const std::size_t c = plan_.in_channels;
  const std::size_t wide = c * plan_.expansion;
  for (std::size_t i = 0; i < plan_.ref_depth; ++i) {
    const std::string block = name + ".block" + std::to_string(i);
    LocalAggregation agg(plan_.aggregation, c, registry, block + ".agg", rng);
    if (agg.out_channels() != c) {
      throw ConfigError(block + ": aggregation must preserve width");
    }
    Dense expand = Dense::make(registry, block + ".expand", c, wide, rng, true, true);
    Linear contract = Linear::make(registry, block + ".contract", wide, c, rng, true);
    blocks_.push_back(RefBlock{std::move(agg), std::move(expand), std::move(contract)});
  }
  if (!blocks_.empty()) {
    encoder_ = make_encoder(plan_, blocks_.front().aggregation.code_width(),
                            registry, name + ".pe", rng);
  }
}

StageState RefStage::forward(ForwardContext& ctx, const StageState& input) {
  if (blocks_.empty()) return input;
  const std::size_t n = input.points;
  const std::size_t k = plan_.k;
  const bool absolute = encoder_ && encoder_->config().coordinates ==
                                        CoordinateMode::absolute;
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  Grouping grouping;
  for (std::size_t b = 0; b < input.batch; ++b) {
    auto pos = input.cloud_positions(b);
    const NeighborTable table = knn_group_centroids(pos, identity, k);
    append_grouping(grouping, table, pos, pos, b * n, absolute);
  }
  ++ctx.stats.ref_tables_built;

  Tensor codes;
  if (encoder_) {
    codes = encoder_->encode(ctx, absolute ? grouping.coords : grouping.offsets,
                             {input.batch * n, k});
    ++ctx.stats.ref_codes_built;
    ctx.stats.ref_code_reuses += blocks_.size() - 1;
  }
  const FusionMode fusion = encoder_ ? encoder_->config().fusion : FusionMode::add;

  StageState out;
  out.batch = input.batch;
  out.points = input.points;
  out.positions = input.positions;
  out.features = input.features;
  for (auto& block : blocks_) {
    out.features = block.forward(ctx, out.features, grouping.neighbors, k,
                                 grouping.offsets, codes, fusion);
  }
  return out;
}

void RefStage::account(CostReport& report, const std::string& stage,
                       std::uint64_t n) const {
  if (blocks_.empty()) return;
  for (const auto& block : blocks_) block.account(report, stage, n, plan_.k);
  if (encoder_) encoder_->account(report, stage, n * plan_.k);
  report.geometry_comparisons += n * n;
}

// ------------------------------------------------------- InvertedResidualMlp

InvertedResidualMlp::InvertedResidualMlp(std::size_t channels,
                                         std::size_t expansion,
                                         ParamRegistry& registry,
                                         const std::string& name, Rng& rng,
                                         bool zero_init)
    : expand_(Dense::make(registry, name + ".expand", channels,
                          channels * expansion, rng, true, true)),
      contract_(Linear::make(registry, name + ".contract", channels * expansion,
                             channels, rng, zero_init)) {
  if (expansion == 0) throw ConfigError("expansion ratio must be >= 1");
}

Tensor InvertedResidualMlp::forward(ForwardContext& ctx, const Tensor& x) {
  Tensor h = contract_.forward(ctx.graph, expand_.forward(ctx, x));
  return add(ctx.graph, x, h);
}

void InvertedResidualMlp::account(CostReport& report, const std::string& stage,
                                  const std::string& kind,
                                  std::uint64_t rows) const {
  expand_.account(report, stage, kind, rows);
  report.add(stage, kind, contract_.param_count(),
             rows * contract_.in * contract_.out);
}

std::uint64_t InvertedResidualMlp::param_count() const {
  return expand_.param_count() + contract_.param_count();
}

// ------------------------------------------------------------ BackwardFusion

BackwardFusion::BackwardFusion(std::size_t high_channels,
                               std::size_t low_channels, std::size_t expansion,
                               ParamRegistry& registry, const std::string& name,
                               Rng& rng)
    : high_channels_(high_channels),
      low_channels_(low_channels),
      expand_(Linear::make(registry, name + ".expand", high_channels,
                           high_channels * expansion, rng)),
      contract_(Linear::make(registry, name + ".contract",
                             high_channels * expansion, high_channels, rng)),
      project_(Linear::make(registry, name + ".project", high_channels,
                            low_channels, rng, true)) {
  if (expansion == 0) throw ConfigError("expansion ratio must be >= 1");
}

Tensor BackwardFusion::gate(ForwardContext& ctx, const Tensor& high,
                            std::size_t batch) {
  Graph& g = ctx.graph;
  if (high.rank() != 2 || high.dim(1) != high_channels_) {
    throw DimensionError("BFM high branch expects rows x " +
                         std::to_string(high_channels_) + ", got " +
                         shape_string(high.shape()));
  }
  if (batch == 0 || high.dim(0) % batch != 0) {
    throw DimensionError("BFM rows not divisible by batch");
  }
  const std::size_t points = high.dim(0) / batch;
  Tensor clouds = reshape(g, high, {batch, points, high_channels_});
  Tensor pooled = add(g, reduce(g, clouds, 1, Reduction::max),
                      reduce(g, clouds, 1, Reduction::mean));
  Tensor hidden = relu(g, expand_.forward(g, pooled));
  return sigmoid(g, contract_.forward(g, hidden));
}

Tensor BackwardFusion::forward(ForwardContext& ctx, const Tensor& high,
                               const Tensor& low, std::size_t batch) {
  Graph& g = ctx.graph;
  if (low.rank() != 2 || low.dim(1) != low_channels_ || low.dim(0) != high.dim(0)) {
    throw DimensionError("BFM low branch " + shape_string(low.shape()) +
                         " vs high " + shape_string(high.shape()) + " and " +
                         std::to_string(low_channels_) + " channels");
  }
  Tensor gates = gate(ctx, high, batch);
  const std::size_t rows = high.dim(0);
  const std::vector<std::size_t> owner = cloud_row_index(batch, rows / batch);
  Tensor high_gate = gather_rows(g, gates, owner, {rows});
  Tensor low_gate = gather_rows(g, project_.forward(g, gates), owner, {rows});
  Tensor high_out = add(g, high, mul(g, high, high_gate));
  Tensor low_out = add(g, low, mul(g, low, low_gate));
  return concat(g, {high_out, low_out}, 1);
}

void BackwardFusion::account(CostReport& report, const std::string& stage,
                             std::uint64_t rows) const {
  // The gate MLP runs once per cloud.
  report.add(stage, cost_kind::kBfm,
             expand_.param_count() + contract_.param_count() +
                 project_.param_count(),
             expand_.in * expand_.out + contract_.in * contract_.out +
                 project_.in * project_.out +
                 rows * (high_channels_ + low_channels_));
}

std::uint64_t BackwardFusion::param_count() const {
  return expand_.param_count() + contract_.param_count() + project_.param_count();
}

// -------------------------------------------------------------- DecoderStage

DecoderStage::DecoderStage(std::size_t skip_channels, std::size_t low_channels,
                           std::size_t out_channels, std::size_t expansion,
                           ParamRegistry& registry, const std::string& name,
                           Rng& rng)
    : fusion_(skip_channels, low_channels, expansion, registry, name + ".bfm", rng),
      reduce_(Dense::make(registry, name + ".reduce", skip_channels + low_channels,
                          out_channels, rng, true, true)),
      refine_(out_channels, expansion, registry, name + ".refine", rng, true) {}

StageState DecoderStage::forward(ForwardContext& ctx, const StageState& low,
                                 const StageState& skip) {
  if (low.batch != skip.batch) throw DimensionError("decoder batch mismatch");
  std::vector<std::size_t> indices;
  std::vector<double> weights;
  indices.reserve(skip.rows() * kInterpolationNeighbors);
  weights.reserve(skip.rows() * kInterpolationNeighbors);
  for (std::size_t b = 0; b < skip.batch; ++b) {
    InterpolationTable t =
        interpolation_weights(low.cloud_positions(b), skip.cloud_positions(b));
    for (std::size_t idx : t.indices) indices.push_back(idx + b * low.points);
    weights.insert(weights.end(), t.weights.begin(), t.weights.end());
  }
  Tensor up = weighted_gather_rows(ctx.graph, low.features, indices, weights,
                                   kInterpolationNeighbors);
  Tensor fused = fusion_.forward(ctx, skip.features, up, skip.batch);
  StageState out;
  out.batch = skip.batch;
  out.points = skip.points;
  out.positions = skip.positions;
  out.features = refine_.forward(ctx, reduce_.forward(ctx, fused));
  return out;
}

void DecoderStage::account(CostReport& report, const std::string& stage,
                           std::uint64_t n_high) const {
  report.add(stage, cost_kind::kDecoder, 0,
             n_high * kInterpolationNeighbors * fusion_.low_channels());
  fusion_.account(report, stage, n_high);
  reduce_.account(report, stage, cost_kind::kDecoder, n_high);
  refine_.account(report, stage, cost_kind::kDecoder, n_high);
}

}  // namespace hpenet
