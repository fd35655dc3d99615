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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace hpenet {

using Vec3 = std::array<double, 3>;

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

/// Positions (N x 3) plus optional row-major per-point features (N x C).
struct PointSet {
  std::vector<Vec3> positions;
  std::vector<double> features;
  std::size_t channels = 0;

  PointSet() = default;
  explicit PointSet(std::vector<Vec3> pos);
  PointSet(std::vector<Vec3> pos, std::vector<double> feats, std::size_t c);

  std::size_t size() const noexcept { return positions.size(); }
  bool has_features() const noexcept { return channels > 0; }
};

/// For M query points, k neighbor indices each into a source set of
/// `source_size` points. Row m occupies neighbors[m*k, (m+1)*k).
struct NeighborTable {
  std::vector<std::size_t> centroids;
  std::vector<std::size_t> neighbors;
  std::size_t k = 0;
  std::size_t source_size = 0;

  std::size_t rows() const noexcept { return k == 0 ? 0 : neighbors.size() / k; }
  std::span<const std::size_t> row(std::size_t m) const {
    return {neighbors.data() + m * k, k};
  }
};

/// Greedy max-min subset selection starting from `start`. Among equally
/// distant candidates the lowest index wins.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points,
                                               std::size_t count,
                                               std::size_t start = 0);

/// Index of the lexicographically smallest (x, y, z) position; lowest index
/// on exact duplicates. Used as an order-independent FPS start.
std::size_t lexicographic_min_index(std::span<const Vec3> points);

/// k nearest source points per query by squared distance, ties to the lower
/// source index. When k exceeds the source size the nearest point repeats.
NeighborTable knn_group(std::span<const Vec3> query,
                        std::span<const Vec3> source, std::size_t k);

/// Same as knn_group with query = source[centroids]; each centroid is placed
/// first in its own row even when another source point coincides with it.
NeighborTable knn_group_centroids(std::span<const Vec3> source,
                                  std::span<const std::size_t> centroids,
                                  std::size_t k);

/// offsets[m][j] = source[neighbor j of m] - query[m], flattened M x k x 3.
std::vector<double> relative_offsets(const NeighborTable& table,
                                     std::span<const Vec3> query,
                                     std::span<const Vec3> source);

/// Neighbor positions themselves (absolute coordinates), M x k x 3.
std::vector<double> neighbor_positions(const NeighborTable& table,
                                       std::span<const Vec3> source);

inline constexpr std::size_t kInterpolationNeighbors = 3;
inline constexpr double kInterpolationEpsilon = 1e-10;

/// Three-nearest inverse-squared-distance weights from a low-resolution set
/// to each high-resolution point; rows are normalized to sum to one. With
/// fewer than three low points the unused slots carry weight zero.
struct InterpolationTable {
  std::vector<std::size_t> indices;
  std::vector<double> weights;
  std::size_t width = kInterpolationNeighbors;
};

InterpolationTable interpolation_weights(std::span<const Vec3> low,
                                         std::span<const Vec3> high);

/// Returns N_high x C features interpolated from `low`.
std::vector<double> interpolate_upsample(const PointSet& low,
                                         std::span<const Vec3> high);

}  // namespace hpenet
