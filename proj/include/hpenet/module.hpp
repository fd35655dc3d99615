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
#include <random>
#include <string>
#include <vector>

#include "hpenet/cost.hpp"
#include "hpenet/ops.hpp"
#include "hpenet/optim.hpp"
#include "hpenet/tensor.hpp"

namespace hpenet {

using Rng = std::mt19937_64;

/// Named, hierarchically addressed tensors of a model. Learnable entries
/// receive gradients; the rest are buffers such as running statistics.
struct ParamEntry {
  std::string name;
  Tensor tensor;
  bool learnable = true;
  bool decay = true;
};

class ParamRegistry {
 public:
  /// Registers `tensor` under `name`. Throws ConfigError on duplicates.
  Tensor add(std::string name, Tensor tensor, bool learnable = true,
             bool decay = true);

  const std::vector<ParamEntry>& entries() const noexcept { return entries_; }
  const ParamEntry* find(const std::string& name) const;

  std::vector<OptimizedParam> optimized() const;
  std::uint64_t learnable_scalars() const;
  void zero_grad();

 private:
  std::vector<ParamEntry> entries_;
};

/// Instrumentation collected during one forward pass.
struct ForwardStats {
  std::size_t abs_tables_built = 0;
  std::size_t ref_tables_built = 0;
  std::size_t ref_codes_built = 0;
  std::size_t ref_code_reuses = 0;
};

struct ForwardContext {
  Graph& graph;
  NormMode mode = NormMode::train;
  ForwardStats stats{};
};

/// Fan-in scaled uniform initialization, U(-1/sqrt(in), 1/sqrt(in)).
struct Linear {
  Tensor weight;
  Tensor bias;
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear make(ParamRegistry& registry, const std::string& name,
                     std::size_t in, std::size_t out, Rng& rng,
                     bool zero_init = false);

  Tensor forward(Graph& graph, const Tensor& x) const;
  std::uint64_t param_count() const { return in * out + out; }
};

/// linear -> optional normalization -> optional relu.
struct Dense {
  Linear linear;
  std::optional<NormParams> norm;
  bool activate = true;

  static Dense make(ParamRegistry& registry, const std::string& name,
                    std::size_t in, std::size_t out, Rng& rng, bool use_norm,
                    bool activate, bool zero_init = false);

  Tensor forward(ForwardContext& ctx, const Tensor& x);

  /// Adds this layer's cost for `rows` input rows; linear cost goes to
  /// `kind`, normalization and activation cost to the norm/act bucket.
  void account(CostReport& report, const std::string& stage,
               const std::string& kind, std::uint64_t rows) const;
  std::uint64_t param_count() const;
};

/// Sequential stack of Dense layers.
struct DenseStack {
  std::vector<Dense> layers;

  Tensor forward(ForwardContext& ctx, const Tensor& x);
  void account(CostReport& report, const std::string& stage,
               const std::string& kind, std::uint64_t rows) const;
  std::size_t out_channels() const { return layers.back().linear.out; }
};

}  // namespace hpenet
