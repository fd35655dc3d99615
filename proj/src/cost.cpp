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

#include "hpenet/cost.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace hpenet {

void CostReport::add(const std::string& stage, const std::string& kind,
                     std::uint64_t params, std::uint64_t flops) {
  auto it = std::find_if(items.begin(), items.end(), [&](const CostItem& item) {
    return item.stage == stage && item.kind == kind;
  });
  if (it == items.end()) {
    items.push_back({stage, kind, params, flops});
  } else {
    it->params += params;
    it->flops += flops;
  }
}

std::uint64_t CostReport::total_params() const {
  std::uint64_t n = 0;
  for (const auto& item : items) n += item.params;
  return n;
}

std::uint64_t CostReport::total_flops() const {
  std::uint64_t n = 0;
  for (const auto& item : items) n += item.flops;
  return n;
}

std::uint64_t CostReport::stage_params(const std::string& stage) const {
  std::uint64_t n = 0;
  for (const auto& item : items) {
    if (item.stage == stage) n += item.params;
  }
  return n;
}

std::uint64_t CostReport::stage_flops(const std::string& stage) const {
  std::uint64_t n = 0;
  for (const auto& item : items) {
    if (item.stage == stage) n += item.flops;
  }
  return n;
}

std::uint64_t CostReport::kind_flops(const std::string& kind) const {
  std::uint64_t n = 0;
  for (const auto& item : items) {
    if (item.kind == kind) n += item.flops;
  }
  return n;
}

std::uint64_t CostReport::kind_params(const std::string& kind) const {
  std::uint64_t n = 0;
  for (const auto& item : items) {
    if (item.kind == kind) n += item.params;
  }
  return n;
}

std::string CostReport::to_csv() const {
  std::ostringstream os;
  os << "stage,kind,params,flops\n";
  for (const auto& item : items) {
    os << item.stage << ',' << item.kind << ',' << item.params << ','
       << item.flops << '\n';
  }
  os << "total,all," << total_params() << ',' << total_flops() << '\n';
  return os.str();
}

std::string CostReport::to_text() const {
  std::ostringstream os;
  os << "input points: " << points << '\n';
  os << std::left << std::setw(14) << "stage" << std::setw(12) << "kind"
     << std::right << std::setw(14) << "params" << std::setw(16) << "flops"
     << '\n';
  for (const auto& item : items) {
    os << std::left << std::setw(14) << item.stage << std::setw(12) << item.kind
       << std::right << std::setw(14) << item.params << std::setw(16)
       << item.flops << '\n';
  }
  os << std::left << std::setw(26) << "total" << std::right << std::setw(14)
     << total_params() << std::setw(16) << total_flops() << '\n';
  os << "geometry distance evaluations: " << geometry_comparisons << '\n';
  os << "(flops count one multiply-accumulate each)\n";
  return os.str();
}

}  // namespace hpenet
