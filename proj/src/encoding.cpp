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

#include "hpenet/encoding.hpp"

#include <algorithm>
#include <cmath>

#include "hpenet/error.hpp"

namespace hpenet {

std::string_view to_string(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::none: return "none";
    case EncodingKind::pe_sin: return "pe_sin";
    case EncodingKind::pe_mlp: return "pe_mlp";
    case EncodingKind::hpe_sin: return "hpe_sin";
    case EncodingKind::hpe_mlp: return "hpe_mlp";
  }
  return "none";
}

std::string_view to_string(FusionMode mode) {
  return mode == FusionMode::add ? "add" : "multiply";
}

std::string_view to_string(CoordinateMode mode) {
  return mode == CoordinateMode::relative ? "relative" : "absolute";
}

EncodingKind parse_encoding_kind(std::string_view text) {
  for (auto kind : {EncodingKind::none, EncodingKind::pe_sin, EncodingKind::pe_mlp,
                    EncodingKind::hpe_sin, EncodingKind::hpe_mlp}) {
    if (to_string(kind) == text) return kind;
  }
  throw ConfigError("unknown encoding kind '" + std::string(text) + "'");
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "add") return FusionMode::add;
  if (text == "multiply" || text == "mul") return FusionMode::multiply;
  throw ConfigError("unknown fusion mode '" + std::string(text) + "'");
}

CoordinateMode parse_coordinate_mode(std::string_view text) {
  if (text == "relative") return CoordinateMode::relative;
  if (text == "absolute") return CoordinateMode::absolute;
  throw ConfigError("unknown coordinate mode '" + std::string(text) + "'");
}

std::size_t EncodingConfig::hidden_dim() const {
  const double scaled = std::round(static_cast<double>(output_dim) * hidden_ratio);
  return std::max<std::size_t>(1, static_cast<std::size_t>(scaled));
}

std::size_t EncodingConfig::projection_input_dim() const {
  switch (kind) {
    case EncodingKind::pe_mlp: return 3;
    case EncodingKind::hpe_mlp: return hidden_dim();
    case EncodingKind::hpe_sin: return pe_sin_width(hidden_dim());
    default: return 0;
  }
}

void EncodingConfig::validate() const {
  if (!active()) return;
  if (output_dim == 0) throw ConfigError("encoding output_dim must be >= 1");
  if (!(hidden_ratio > 0.0)) {
    throw ConfigError("encoding hidden ratio must be positive");
  }
  if (kind == EncodingKind::pe_sin && output_dim < 6) {
    throw ConfigError("pe_sin needs at least 6 channels, got " +
                      std::to_string(output_dim));
  }
  if (kind == EncodingKind::hpe_sin && pe_sin_width(hidden_dim()) < 6) {
    throw ConfigError("hpe_sin needs a sinusoid width of at least 6; " +
                      std::to_string(output_dim) + " channels at ratio " +
                      std::to_string(hidden_ratio) + " give " +
                      std::to_string(pe_sin_width(hidden_dim())));
  }
}

std::size_t pe_sin_width(std::size_t channels) { return channels / 6 * 6; }

std::vector<double> pe_sin(std::span<const double> coords, std::size_t channels,
                           double rescale) {
  if (channels < 6) {
    throw ConfigError("pe_sin needs at least 6 channels, got " +
                      std::to_string(channels));
  }
  if (coords.size() % 3 != 0) {
    throw DimensionError("pe_sin: coordinate buffer is not a multiple of 3");
  }
  const std::size_t rows = coords.size() / 3;
  const std::size_t groups = channels / 6;
  const std::size_t width = groups * 6;
  std::vector<double> freq(groups);
  for (std::size_t i = 0; i < groups; ++i) {
    freq[i] = 100.0 / std::pow(1000.0, 6.0 * static_cast<double>(i) /
                                           static_cast<double>(channels));
  }
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.data() + r * width;
    for (std::size_t i = 0; i < groups; ++i) {
      for (std::size_t a = 0; a < 3; ++a) {
        const double arg = freq[i] * (rescale * coords[r * 3 + a]);
        dst[6 * i + 2 * a] = std::sin(arg);
        dst[6 * i + 2 * a + 1] = std::cos(arg);
      }
    }
  }
  return out;
}

PositionalEncoder::PositionalEncoder(const EncodingConfig& config,
                                     ParamRegistry& registry,
                                     const std::string& name, Rng& rng)
    : config_(config) {
  config_.validate();
  const std::size_t c = config_.output_dim;
  switch (config_.kind) {
    case EncodingKind::none:
    case EncodingKind::pe_sin:
      break;
    case EncodingKind::pe_mlp:
      lift_ = Dense::make(registry, name + ".lift", 3, 3, rng, true, true);
      projection_ = Linear::make(registry, name + ".proj", 3, c, rng);
      break;
    case EncodingKind::hpe_mlp:
      lift_ = Dense::make(registry, name + ".lift", 3, config_.hidden_dim(), rng,
                          true, true);
      projection_ = Linear::make(registry, name + ".proj", config_.hidden_dim(),
                                 c, rng);
      break;
    case EncodingKind::hpe_sin:
      projection_ = Linear::make(registry, name + ".proj",
                                 config_.projection_input_dim(), c, rng);
      break;
  }
}

Tensor PositionalEncoder::encode(ForwardContext& ctx,
                                 std::span<const double> coords, Shape leading) {
  if (!config_.active()) throw UsageError("encode() on an inactive encoder");
  const std::size_t rows = coords.size() / 3;
  if (shape_size(leading) != rows) {
    throw DimensionError("encode: leading shape " + shape_string(leading) +
                         " does not match " + std::to_string(rows) + " rows");
  }
  const std::size_t c = config_.output_dim;
  Shape out_shape = leading;
  out_shape.push_back(c);

  if (config_.kind == EncodingKind::pe_sin) {
    // Sinusoids fill the first floor(C/6)*6 channels; the rest stay zero.
    const std::vector<double> sin = pe_sin(coords, c, config_.rescale);
    const std::size_t width = pe_sin_width(c);
    std::vector<double> padded(rows * c, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(sin.data() + r * width, width, padded.data() + r * c);
    }
    Tensor codes(out_shape, std::move(padded));
    ctx.graph.record("pe_sin", codes, {});
    return codes;
  }

  Tensor hidden;
  if (config_.kind == EncodingKind::hpe_sin) {
    const std::size_t groups_channels = config_.hidden_dim();
    const std::size_t width = pe_sin_width(groups_channels);
    Shape s = leading;
    s.push_back(width);
    hidden = Tensor(s, pe_sin(coords, groups_channels, config_.rescale));
    ctx.graph.record("hpe_sin", hidden, {});
  } else {
    Shape s = leading;
    s.push_back(3);
    Tensor input(s, std::vector<double>(coords.begin(), coords.end()));
    hidden = lift_->forward(ctx, input);
  }
  return projection_->forward(ctx.graph, hidden);
}

void PositionalEncoder::account(CostReport& report, const std::string& stage,
                                std::uint64_t rows) const {
  if (lift_) lift_->account(report, stage, cost_kind::kEncoding, rows);
  if (projection_) {
    report.add(stage, cost_kind::kEncoding, projection_->param_count(),
               rows * projection_->in * projection_->out);
  }
}

std::uint64_t PositionalEncoder::param_count() const {
  std::uint64_t n = 0;
  if (lift_) n += lift_->param_count();
  if (projection_) n += projection_->param_count();
  return n;
}

Tensor fuse_positional(Graph& graph, const Tensor& features, const Tensor& codes,
                       FusionMode mode) {
  if (features.shape() != codes.shape()) {
    throw DimensionError("fuse_positional: features " +
                         shape_string(features.shape()) + " vs codes " +
                         shape_string(codes.shape()));
  }
  return mode == FusionMode::add ? add(graph, features, codes)
                                 : mul(graph, features, codes);
}

}  // namespace hpenet
