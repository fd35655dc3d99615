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
#include <vector>

namespace hpenet {

// Cost buckets. Aggregation holds only the set-operation linears so it can be
// compared against the closed-form aggregation cost directly.
namespace cost_kind {
inline constexpr const char* kEmbedding = "embedding";
inline constexpr const char* kAggregation = "aggregation";
inline constexpr const char* kEncoding = "encoding";
inline constexpr const char* kRefMlp = "ref_mlp";
inline constexpr const char* kBfm = "bfm";
inline constexpr const char* kDecoder = "decoder";
inline constexpr const char* kHead = "head";
inline constexpr const char* kNormAct = "norm_act";
}  // namespace cost_kind

struct CostItem {
  std::string stage;
  std::string kind;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

/// Parameter and FLOP counts (one FLOP per multiply-accumulate) broken down
/// by stage and operation kind. Geometry work is kept apart as a count of
/// point-to-point distance evaluations.
struct CostReport {
  std::size_t points = 0;
  std::vector<CostItem> items;
  std::uint64_t geometry_comparisons = 0;

  /// Adds to the (stage, kind) row, creating it on first use.
  void add(const std::string& stage, const std::string& kind,
           std::uint64_t params, std::uint64_t flops);

  std::uint64_t total_params() const;
  std::uint64_t total_flops() const;
  std::uint64_t stage_params(const std::string& stage) const;
  std::uint64_t stage_flops(const std::string& stage) const;
  std::uint64_t kind_flops(const std::string& kind) const;
  std::uint64_t kind_params(const std::string& kind) const;

  /// CSV with header `stage,kind,params,flops`, rows in insertion order,
  /// then a `total` row.
  std::string to_csv() const;
  std::string to_text() const;
};

}  // namespace hpenet
