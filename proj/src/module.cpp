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

#include "hpenet/module.hpp"

#include <algorithm>
#include <cmath>

#include "hpenet/error.hpp"

namespace hpenet {

Tensor ParamRegistry::add(std::string name, Tensor tensor, bool learnable,
                          bool decay) {
  if (find(name) != nullptr) {
    throw ConfigError("duplicate parameter name '" + name + "'");
  }
  tensor.set_requires_grad(learnable);
  entries_.push_back({std::move(name), tensor, learnable, decay});
  return tensor;
}

const ParamEntry* ParamRegistry::find(const std::string& name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const ParamEntry& e) { return e.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

std::vector<OptimizedParam> ParamRegistry::optimized() const {
  std::vector<OptimizedParam> out;
  for (const auto& e : entries_) {
    if (e.learnable) out.push_back({e.tensor, e.decay});
  }
  return out;
}

std::uint64_t ParamRegistry::learnable_scalars() const {
  std::uint64_t n = 0;
  for (const auto& e : entries_) {
    if (e.learnable) n += e.tensor.size();
  }
  return n;
}

void ParamRegistry::zero_grad() {
  for (auto& e : entries_) {
    if (e.learnable) e.tensor.zero_grad();
  }
}

Linear Linear::make(ParamRegistry& registry, const std::string& name,
                    std::size_t in, std::size_t out, Rng& rng, bool zero_init) {
  Linear l;
  l.in = in;
  l.out = out;
  std::vector<double> w(in * out, 0.0);
  std::vector<double> b(out, 0.0);
  if (!zero_init) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : w) v = dist(rng);
    for (auto& v : b) v = dist(rng);
  }
  l.weight = registry.add(name + ".weight", Tensor({in, out}, std::move(w)));
  l.bias = registry.add(name + ".bias", Tensor({out}, std::move(b)), true, false);
  return l;
}

Tensor Linear::forward(Graph& graph, const Tensor& x) const {
  return hpenet::linear(graph, x, weight, bias);
}

Dense Dense::make(ParamRegistry& registry, const std::string& name,
                  std::size_t in, std::size_t out, Rng& rng, bool use_norm,
                  bool activate, bool zero_init) {
  Dense d;
  d.linear = Linear::make(registry, name, in, out, rng, zero_init);
  if (use_norm) {
    NormParams p = NormParams::make(out);
    registry.add(name + ".norm.scale", p.scale, true, false);
    registry.add(name + ".norm.shift", p.shift, true, false);
    registry.add(name + ".norm.running_mean", p.running_mean, false, false);
    registry.add(name + ".norm.running_var", p.running_var, false, false);
    d.norm = p;
  }
  d.activate = activate;
  return d;
}

Tensor Dense::forward(ForwardContext& ctx, const Tensor& x) {
  Tensor y = linear.forward(ctx.graph, x);
  if (norm) y = normalize(ctx.graph, y, *norm, ctx.mode);
  if (activate) y = relu(ctx.graph, y);
  return y;
}

void Dense::account(CostReport& report, const std::string& stage,
                    const std::string& kind, std::uint64_t rows) const {
  report.add(stage, kind, linear.param_count(), rows * linear.in * linear.out);
  const std::uint64_t elements = rows * linear.out;
  std::uint64_t extra_flops = 0;
  std::uint64_t extra_params = 0;
  if (norm) {
    extra_flops += elements;
    extra_params += 2 * linear.out;
  }
  if (activate) extra_flops += elements;
  if (extra_flops > 0 || extra_params > 0) {
    report.add(stage, cost_kind::kNormAct, extra_params, extra_flops);
  }
}

std::uint64_t Dense::param_count() const {
  return linear.param_count() + (norm ? 2 * linear.out : 0);
}

Tensor DenseStack::forward(ForwardContext& ctx, const Tensor& x) {
  Tensor y = x;
  for (auto& layer : layers) y = layer.forward(ctx, y);
  return y;
}

void DenseStack::account(CostReport& report, const std::string& stage,
                         const std::string& kind, std::uint64_t rows) const {
  for (const auto& layer : layers) layer.account(report, stage, kind, rows);
}

}  // namespace hpenet
