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
#include <optional>
#include <string>
#include <vector>

#include "hpenet/aggregation.hpp"
#include "hpenet/encoding.hpp"
#include "hpenet/geometry.hpp"
#include "hpenet/module.hpp"

namespace hpenet {

/// A batch of equally sized clouds at one resolution. Rows are cloud-major:
/// row r belongs to cloud r / points.
struct StageState {
  std::size_t batch = 0;
  std::size_t points = 0;
  std::vector<Vec3> positions;
  Tensor features;

  std::size_t rows() const noexcept { return batch * points; }
  std::size_t channels() const { return features.dim(1); }
  std::span<const Vec3> cloud_positions(std::size_t b) const {
    return {positions.data() + b * points, points};
  }

  static StageState from_point_set(const PointSet& set);
};

enum class StageKind { abs, ref, decoder };

struct StagePlan {
  StageKind kind = StageKind::abs;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t k = 16;
  std::size_t downsample_ratio = 4;
  AggregationConfig aggregation;
  EncodingConfig encoding;
  std::size_t ref_depth = 0;
  std::size_t expansion = 4;
  /// FPS starts at the lexicographically smallest point, which keeps the
  /// sample independent of input order; otherwise at index 0.
  bool lexicographic_start = true;
};

/// Sampling, grouping and one local aggregation; lowers the resolution.
class AbsStage {
 public:
  AbsStage(const StagePlan& plan, ParamRegistry& registry,
           const std::string& name, Rng& rng);

  StageState forward(ForwardContext& ctx, const StageState& input);

  /// Centroid count for n input points.
  std::size_t output_points(std::size_t n) const;

  void account(CostReport& report, const std::string& stage,
               std::uint64_t n_in) const;

  const StagePlan& plan() const noexcept { return plan_; }
  LocalAggregation& aggregation() noexcept { return aggregation_; }
  std::optional<PositionalEncoder>& encoder() noexcept { return encoder_; }

 private:
  StagePlan plan_;
  LocalAggregation aggregation_;
  std::optional<PositionalEncoder> encoder_;
};

/// Resolution-preserving residual block: non-local MLP, grouping with fused
/// codes, max reduction, then an expand/contract pointwise MLP.
struct RefBlock {
  LocalAggregation aggregation;
  Dense expand;
  Linear contract;

  Tensor forward(ForwardContext& ctx, const Tensor& x,
                 std::span<const std::size_t> neighbors, std::size_t k,
                 std::span<const double> offsets, const Tensor& codes,
                 FusionMode fusion);
  void account(CostReport& report, const std::string& stage, std::uint64_t n,
               std::uint64_t k) const;
};

/// A stack of REF blocks that share one neighbor table and one code tensor.
class RefStage {
 public:
  RefStage(const StagePlan& plan, ParamRegistry& registry,
           const std::string& name, Rng& rng);

  StageState forward(ForwardContext& ctx, const StageState& input);

  void account(CostReport& report, const std::string& stage,
               std::uint64_t n) const;

  std::size_t depth() const noexcept { return blocks_.size(); }
  std::vector<RefBlock>& blocks() noexcept { return blocks_; }
  std::optional<PositionalEncoder>& encoder() noexcept { return encoder_; }

 private:
  StagePlan plan_;
  std::vector<RefBlock> blocks_;
  std::optional<PositionalEncoder> encoder_;
};

/// x + contract(relu(norm(expand(x)))).
class InvertedResidualMlp {
 public:
  InvertedResidualMlp(std::size_t channels, std::size_t expansion,
                      ParamRegistry& registry, const std::string& name, Rng& rng,
                      bool zero_init = false);

  Tensor forward(ForwardContext& ctx, const Tensor& x);
  void account(CostReport& report, const std::string& stage,
               const std::string& kind, std::uint64_t rows) const;
  std::uint64_t param_count() const;

  Dense& expand() noexcept { return expand_; }
  Linear& contract() noexcept { return contract_; }

 private:
  Dense expand_;
  Linear contract_;
};

/// Gated fusion of high- and low-resolution features using per-cloud pooled
/// statistics of the high branch.
class BackwardFusion {
 public:
  BackwardFusion(std::size_t high_channels, std::size_t low_channels,
                 std::size_t expansion, ParamRegistry& registry,
                 const std::string& name, Rng& rng);

  /// high: (batch*points) x C, low: (batch*points) x C_low, both at the
  /// high resolution. Returns (batch*points) x (C + C_low).
  Tensor forward(ForwardContext& ctx, const Tensor& high, const Tensor& low,
                 std::size_t batch);

  /// Per-cloud gate, batch x C, for inspection.
  Tensor gate(ForwardContext& ctx, const Tensor& high, std::size_t batch);

  void account(CostReport& report, const std::string& stage,
               std::uint64_t rows) const;
  std::uint64_t param_count() const;

  Linear& squeeze() noexcept { return expand_; }
  Linear& excite() noexcept { return contract_; }
  Linear& project() noexcept { return project_; }
  std::size_t high_channels() const noexcept { return high_channels_; }
  std::size_t low_channels() const noexcept { return low_channels_; }

 private:
  std::size_t high_channels_;
  std::size_t low_channels_;
  Linear expand_;
  Linear contract_;
  Linear project_;
};

/// Upsamples the deeper level, fuses it with the skip features, maps to the
/// skip width and refines with an inverted residual MLP.
class DecoderStage {
 public:
  DecoderStage(std::size_t skip_channels, std::size_t low_channels,
               std::size_t out_channels, std::size_t expansion,
               ParamRegistry& registry, const std::string& name, Rng& rng);

  StageState forward(ForwardContext& ctx, const StageState& low,
                     const StageState& skip);
  void account(CostReport& report, const std::string& stage,
               std::uint64_t n_high) const;

  BackwardFusion& fusion() noexcept { return fusion_; }

 private:
  BackwardFusion fusion_;
  Dense reduce_;
  InvertedResidualMlp refine_;
};

/// Row index -> cloud index for `batch` clouds of `points` rows each.
std::vector<std::size_t> cloud_row_index(std::size_t batch, std::size_t points);

}  // namespace hpenet
