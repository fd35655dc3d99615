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

// Reference implementations used by the unit tests and the acceptance
// runner. They are written independently of the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hpenet/geometry.hpp"
#include "hpenet/metrics.hpp"
#include "hpenet/tensor.hpp"

namespace hpenet::testing {

inline std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed,
                                       double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

// Points on a coarse integer grid; plenty of exact distance ties.
inline std::vector<Vec3> lattice_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(-2, 2);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) {
    p = {static_cast<double>(u(rng)), static_cast<double>(u(rng)),
         static_cast<double>(u(rng))};
  }
  return pts;
}

inline Tensor random_tensor(Shape shape, std::uint64_t seed, bool grad = true,
                            double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = n(rng);
  return Tensor(std::move(shape), std::move(v), grad);
}

inline double dist2(const Vec3& a, const Vec3& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Greedy max-min selection recomputed from scratch at every step.
inline std::vector<std::size_t> brute_force_fps(const std::vector<Vec3>& pts,
                                                std::size_t count,
                                                std::size_t start) {
  std::vector<std::size_t> chosen{start};
  while (chosen.size() < count) {
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double score = std::numeric_limits<double>::infinity();
      for (std::size_t s : chosen) score = std::min(score, dist2(pts[i], pts[s]));
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

// Full sort of (distance, index) per query; pads with the nearest point.
inline std::vector<std::size_t> exhaustive_knn(const std::vector<Vec3>& query,
                                               const std::vector<Vec3>& source,
                                               std::size_t k) {
  std::vector<std::size_t> out;
  for (const Vec3& q : query) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < source.size(); ++i) all.push_back({dist2(source[i], q), i});
    std::sort(all.begin(), all.end());
    for (std::size_t j = 0; j < k; ++j) {
      out.push_back(j < all.size() ? all[j].second : all[0].second);
    }
  }
  return out;
}

// Centroid first, then every other point by (distance, index).
inline std::vector<std::size_t> exhaustive_knn_centroids(
    const std::vector<Vec3>& source, const std::vector<std::size_t>& centroids,
    std::size_t k) {
  std::vector<std::size_t> out;
  for (std::size_t c : centroids) {
    std::vector<std::pair<double, std::size_t>> rest;
    for (std::size_t i = 0; i < source.size(); ++i) {
      if (i != c) rest.push_back({dist2(source[i], source[c]), i});
    }
    std::sort(rest.begin(), rest.end());
    std::vector<std::size_t> row{c};
    for (const auto& r : rest) row.push_back(r.second);
    for (std::size_t j = 0; j < k; ++j) out.push_back(j < row.size() ? row[j] : c);
  }
  return out;
}

struct RecountMetrics {
  double oa = 0.0;
  double macc = 0.0;
  double miou = 0.0;
};

// Per-class recount straight from the label arrays.
inline RecountMetrics recount_metrics(const std::vector<int>& truth,
                                      const std::vector<int>& pred,
                                      std::size_t classes) {
  RecountMetrics r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  r.oa = static_cast<double>(correct) / static_cast<double>(truth.size());
  double acc = 0.0, iou = 0.0;
  std::size_t acc_n = 0, iou_n = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const int ci = static_cast<int>(c);
    std::size_t tp = 0, in_truth = 0, in_pred = 0, in_union = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == ci, p = pred[i] == ci;
      tp += t && p;
      in_truth += t;
      in_pred += p;
      in_union += t || p;
    }
    if (in_truth > 0) {
      acc += static_cast<double>(tp) / static_cast<double>(in_truth);
      ++acc_n;
    }
    if (in_union > 0) {
      iou += static_cast<double>(tp) / static_cast<double>(in_union);
      ++iou_n;
    }
  }
  r.macc = acc / static_cast<double>(acc_n);
  r.miou = iou / static_cast<double>(iou_n);
  return r;
}

struct GradCheck {
  double max_error = 0.0;  // worst norm-wise relative error over tensors
  std::string worst;       // name of that tensor
  std::size_t entries = 0;  // entries compared
};

// Central differences against the tape's gradients. `loss` must rebuild the
// computation on the graph it is given. For each named tensor, up to
// `max_entries` evenly spaced entries are compared; the error of a tensor is
// ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12).
inline GradCheck check_gradients(
    const std::function<Tensor(Graph&)>& loss,
    const std::vector<std::pair<std::string, Tensor>>& inputs, double h = 1e-6,
    std::size_t max_entries = std::numeric_limits<std::size_t>::max()) {
  for (const auto& [name, t] : inputs) {
    Tensor handle = t;
    if (handle.has_grad()) handle.zero_grad();
  }
  {
    Graph g;
    Tensor l = loss(g);
    g.backward(l);
  }
  GradCheck out;
  for (const auto& [name, t] : inputs) {
    Tensor tensor = t;
    auto values = tensor.values();
    const std::vector<double> analytic(tensor.grad().begin(), tensor.grad().end());
    const std::size_t n = values.size();
    const std::size_t stride = std::max<std::size_t>(1, n / std::min(n, max_entries));
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = values[i];
      values[i] = saved + h;
      double up, down;
      {
        Graph g(false);
        up = loss(g).item();
      }
      values[i] = saved - h;
      {
        Graph g(false);
        down = loss(g).item();
      }
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
      ++out.entries;
    }
    const double err = std::sqrt(diff2) / std::max(std::sqrt(a2) + std::sqrt(n2), 1e-12);
    if (err > out.max_error || out.worst.empty()) {
      if (err >= out.max_error) {
        out.max_error = err;
        out.worst = name;
      }
    }
  }
  return out;
}

}  // namespace hpenet::testing
