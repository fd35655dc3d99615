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

#include "hpenet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "hpenet/error.hpp"

namespace hpenet {
namespace {

void check_finite(const std::vector<Vec3>& positions) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (double v : positions[i]) {
      if (!std::isfinite(v)) {
        throw DataError("point " + std::to_string(i) +
                        " has a non-finite coordinate");
      }
    }
  }
}

// Selects the k best candidates under `less`, padding by repeating the best.
template <typename Less>
void select_k(std::vector<std::size_t>& order, std::size_t k, Less less,
              std::vector<std::size_t>& out) {
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), less);
  out.insert(out.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  for (std::size_t j = take; j < k; ++j) out.push_back(order.front());
}

}  // namespace

PointSet::PointSet(std::vector<Vec3> pos) : positions(std::move(pos)) {
  if (positions.empty()) throw SizeError("point set must hold at least one point");
  check_finite(positions);
}

PointSet::PointSet(std::vector<Vec3> pos, std::vector<double> feats,
                   std::size_t c)
    : positions(std::move(pos)), features(std::move(feats)), channels(c) {
  if (positions.empty()) throw SizeError("point set must hold at least one point");
  check_finite(positions);
  if (features.size() != positions.size() * channels) {
    throw DimensionError("feature buffer of " + std::to_string(features.size()) +
                         " values does not match " +
                         std::to_string(positions.size()) + " points x " +
                         std::to_string(channels) + " channels");
  }
}

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points,
                                               std::size_t count,
                                               std::size_t start) {
  const std::size_t n = points.size();
  if (count == 0 || count > n) {
    throw SizeError("farthest_point_sample: cannot select " +
                    std::to_string(count) + " of " + std::to_string(n) +
                    " points");
  }
  if (start >= n) {
    throw SizeError("farthest_point_sample: start index " +
                    std::to_string(start) + " out of range");
  }
  std::vector<std::size_t> selected;
  selected.reserve(count);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  for (std::size_t s = 0; s < count; ++s) {
    selected.push_back(current);
    const Vec3& c = points[current];
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = squared_distance(points[i], c);
      if (d < min_dist[i]) min_dist[i] = d;
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    current = best;
  }
  return selected;
}

std::size_t lexicographic_min_index(std::span<const Vec3> points) {
  if (points.empty()) throw SizeError("lexicographic_min_index: empty set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i] < points[best]) best = i;
  }
  return best;
}

NeighborTable knn_group(std::span<const Vec3> query,
                        std::span<const Vec3> source, std::size_t k) {
  if (source.empty()) throw SizeError("knn_group: empty source set");
  if (k == 0) throw SizeError("knn_group: k must be >= 1");
  NeighborTable table;
  table.k = k;
  table.source_size = source.size();
  table.neighbors.reserve(query.size() * k);
  std::vector<double> dist(source.size());
  std::vector<std::size_t> order(source.size());
  for (const Vec3& q : query) {
    for (std::size_t i = 0; i < source.size(); ++i) {
      dist[i] = squared_distance(source[i], q);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    select_k(order, k,
             [&](std::size_t a, std::size_t b) {
               return std::tie(dist[a], a) < std::tie(dist[b], b);
             },
             table.neighbors);
  }
  return table;
}

NeighborTable knn_group_centroids(std::span<const Vec3> source,
                                  std::span<const std::size_t> centroids,
                                  std::size_t k) {
  if (source.empty()) throw SizeError("knn_group_centroids: empty source set");
  if (k == 0) throw SizeError("knn_group_centroids: k must be >= 1");
  NeighborTable table;
  table.k = k;
  table.source_size = source.size();
  table.centroids.assign(centroids.begin(), centroids.end());
  table.neighbors.reserve(centroids.size() * k);
  std::vector<double> dist(source.size());
  std::vector<std::size_t> order(source.size());
  for (std::size_t c : centroids) {
    if (c >= source.size()) {
      throw SizeError("knn_group: centroid index " + std::to_string(c) +
                      " out of range");
    }
    for (std::size_t i = 0; i < source.size(); ++i) {
      dist[i] = squared_distance(source[i], source[c]);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    select_k(order, k,
             [&](std::size_t a, std::size_t b) {
               return std::make_tuple(dist[a], a != c, a) <
                      std::make_tuple(dist[b], b != c, b);
             },
             table.neighbors);
  }
  return table;
}

std::vector<double> relative_offsets(const NeighborTable& table,
                                     std::span<const Vec3> query,
                                     std::span<const Vec3> source) {
  const std::size_t rows = table.rows();
  if (query.size() != rows || source.size() != table.source_size) {
    throw SizeError("relative_offsets: table does not match the point sets");
  }
  std::vector<double> out(rows * table.k * 3);
  for (std::size_t m = 0; m < rows; ++m) {
    const auto row = table.row(m);
    for (std::size_t j = 0; j < table.k; ++j) {
      if (row[j] >= source.size()) {
        throw SizeError("relative_offsets: neighbor index out of range");
      }
      const Vec3& p = source[row[j]];
      double* dst = out.data() + (m * table.k + j) * 3;
      for (int a = 0; a < 3; ++a) dst[a] = p[a] - query[m][a];
    }
  }
  return out;
}

std::vector<double> neighbor_positions(const NeighborTable& table,
                                       std::span<const Vec3> source) {
  std::vector<double> out(table.neighbors.size() * 3);
  for (std::size_t i = 0; i < table.neighbors.size(); ++i) {
    if (table.neighbors[i] >= source.size()) {
      throw SizeError("neighbor_positions: neighbor index out of range");
    }
    const Vec3& p = source[table.neighbors[i]];
    std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
  return out;
}

InterpolationTable interpolation_weights(std::span<const Vec3> low,
                                         std::span<const Vec3> high) {
  if (low.empty()) throw SizeError("interpolation: empty low-resolution set");
  const std::size_t width = kInterpolationNeighbors;
  const std::size_t used = std::min(width, low.size());
  const NeighborTable nn = knn_group(high, low, used);
  InterpolationTable table;
  table.width = width;
  table.indices.reserve(high.size() * width);
  table.weights.reserve(high.size() * width);
  for (std::size_t i = 0; i < high.size(); ++i) {
    const auto row = nn.row(i);
    double w[kInterpolationNeighbors] = {0.0, 0.0, 0.0};
    double total = 0.0;
    for (std::size_t j = 0; j < used; ++j) {
      w[j] = 1.0 / (squared_distance(low[row[j]], high[i]) + kInterpolationEpsilon);
      total += w[j];
    }
    for (std::size_t j = 0; j < width; ++j) {
      table.indices.push_back(j < used ? row[j] : row[0]);
      table.weights.push_back(w[j] / total);
    }
  }
  return table;
}

std::vector<double> interpolate_upsample(const PointSet& low,
                                         std::span<const Vec3> high) {
  if (!low.has_features()) {
    throw DimensionError("interpolate_upsample: low-resolution set has no features");
  }
  const InterpolationTable table = interpolation_weights(low.positions, high);
  const std::size_t c = low.channels;
  std::vector<double> out(high.size() * c, 0.0);
  for (std::size_t i = 0; i < high.size(); ++i) {
    for (std::size_t j = 0; j < table.width; ++j) {
      const double w = table.weights[i * table.width + j];
      const double* src = low.features.data() + table.indices[i * table.width + j] * c;
      for (std::size_t ch = 0; ch < c; ++ch) out[i * c + ch] += w * src[ch];
    }
  }
  return out;
}

}  // namespace hpenet
