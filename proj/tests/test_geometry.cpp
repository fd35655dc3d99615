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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "hpenet/error.hpp"
#include "hpenet/geometry.hpp"
#include "test_support.hpp"

namespace hpenet {
namespace {

using testing::brute_force_fps;
using testing::exhaustive_knn;
using testing::exhaustive_knn_centroids;
using testing::lattice_points;
using testing::random_points;

TEST(PointSet, ValidatesInput) {
  EXPECT_THROW(PointSet(std::vector<Vec3>{}), SizeError);
  EXPECT_THROW(PointSet({{0, std::nan(""), 0}}), DataError);
  EXPECT_THROW(PointSet({{0, 0, 0}}, {1.0, 2.0}, 3), DimensionError);
}

TEST(Fps, MatchesBruteForceOnRandomAndTiedInputs) {
  for (std::size_t n : {1u, 2u, 7u, 16u, 33u}) {
    for (auto pts : {random_points(n, n), lattice_points(n, n + 100)}) {
      for (std::size_t start = 0; start < n; start += 3) {
        const std::size_t m = (n + 1) / 2;
        EXPECT_EQ(farthest_point_sample(pts, m, start), brute_force_fps(pts, m, start))
            << "n=" << n << " start=" << start;
      }
    }
  }
}

TEST(Fps, FullSampleIsPermutationOfDistinctPoints) {
  auto pts = random_points(20, 5);
  auto idx = farthest_point_sample(pts, 20, 4);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 20u);
  EXPECT_EQ(idx.front(), 4u);
}

TEST(Fps, TiesGoToLowestIndex) {
  // Both candidates sit at distance 1 from the start.
  std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {-1, 0, 0}};
  EXPECT_EQ(farthest_point_sample(pts, 2, 0), (std::vector<std::size_t>{0, 1}));
}

TEST(Fps, RejectsBadCounts) {
  auto pts = random_points(4, 1);
  EXPECT_THROW(farthest_point_sample(pts, 5), SizeError);
  EXPECT_THROW(farthest_point_sample(pts, 0), SizeError);
  EXPECT_THROW(farthest_point_sample(pts, 2, 4), SizeError);
}

TEST(Fps, LexicographicStartIsOrderIndependent) {
  auto pts = random_points(30, 9);
  const Vec3 first = pts[lexicographic_min_index(pts)];
  std::vector<Vec3> reversed(pts.rbegin(), pts.rend());
  EXPECT_EQ(reversed[lexicographic_min_index(reversed)], first);
  for (const Vec3& p : pts) EXPECT_FALSE(p < first);
}

TEST(Knn, MatchesExhaustiveSort) {
  for (std::size_t n : {1u, 5u, 32u, 128u}) {
    auto source = random_points(n, n + 7);
    auto query = random_points(9, n + 8);
    for (std::size_t k : {1u, 4u, 16u, 130u}) {
      NeighborTable t = knn_group(query, source, k);
      EXPECT_EQ(t.neighbors, exhaustive_knn(query, source, k)) << n << " " << k;
      EXPECT_EQ(t.rows(), query.size());
    }
  }
}

TEST(Knn, TiesBreakByIndex) {
  auto pts = lattice_points(60, 3);
  auto query = lattice_points(10, 4);
  EXPECT_EQ(knn_group(query, pts, 12).neighbors, exhaustive_knn(query, pts, 12));
}

TEST(Knn, CentroidVariantPutsCentroidFirst) {
  auto pts = lattice_points(40, 11);
  pts[7] = pts[2];  // coincident with a lower index
  std::vector<std::size_t> centroids{7, 0, 39, 2};
  for (std::size_t k : {1u, 6u, 45u}) {
    NeighborTable t = knn_group_centroids(pts, centroids, k);
    EXPECT_EQ(t.neighbors, exhaustive_knn_centroids(pts, centroids, k));
    for (std::size_t m = 0; m < centroids.size(); ++m) {
      EXPECT_EQ(t.row(m)[0], centroids[m]);
    }
  }
}

TEST(Offsets, RelativeOffsetsCancelTranslation) {
  // Dyadic coordinates and shift keep every subtraction exact.
  std::vector<Vec3> pts;
  for (int i = 0; i < 12; ++i) pts.push_back({i * 0.25, (i % 3) * 0.5, -i * 0.125});
  std::vector<std::size_t> centroids{0, 5, 11};
  NeighborTable t = knn_group_centroids(pts, centroids, 4);
  std::vector<Vec3> query, shifted = pts, shifted_query;
  for (auto c : centroids) query.push_back(pts[c]);
  for (auto& p : shifted) p = {p[0] + 8.0, p[1] - 4.0, p[2] + 0.5};
  for (auto c : centroids) shifted_query.push_back(shifted[c]);
  EXPECT_EQ(relative_offsets(t, query, pts), relative_offsets(t, shifted_query, shifted));
}

TEST(Offsets, AbsolutePositionsAreGathered) {
  auto pts = random_points(6, 2);
  NeighborTable t = knn_group(pts, pts, 2);
  auto pos = neighbor_positions(t, pts);
  for (std::size_t i = 0; i < t.neighbors.size(); ++i) {
    for (int a = 0; a < 3; ++a) EXPECT_EQ(pos[i * 3 + a], pts[t.neighbors[i]][a]);
  }
}

TEST(Interpolation, MatchesDirectInverseDistanceFormula) {
  auto low = random_points(10, 21);
  auto high = random_points(25, 22);
  std::vector<double> feats(10 * 2);
  std::iota(feats.begin(), feats.end(), 0.0);
  PointSet low_set(low, feats, 2);
  auto up = interpolate_upsample(low_set, high);
  auto nn = exhaustive_knn(high, low, 3);
  for (std::size_t i = 0; i < high.size(); ++i) {
    double w[3], total = 0;
    for (int j = 0; j < 3; ++j) {
      w[j] = 1.0 / (testing::dist2(high[i], low[nn[i * 3 + j]]) + 1e-10);
      total += w[j];
    }
    for (int c = 0; c < 2; ++c) {
      double expect = 0;
      for (int j = 0; j < 3; ++j) expect += w[j] / total * feats[nn[i * 3 + j] * 2 + c];
      EXPECT_NEAR(up[i * 2 + c], expect, 1e-12);
    }
  }
}

TEST(Interpolation, WeightsSumToOneAndPadWithZeros) {
  std::vector<Vec3> low{{0, 0, 0}, {1, 0, 0}};
  auto high = random_points(5, 3);
  InterpolationTable t = interpolation_weights(low, high);
  for (std::size_t i = 0; i < high.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < t.width; ++j) s += t.weights[i * t.width + j];
    EXPECT_NEAR(s, 1.0, 1e-15);
    EXPECT_EQ(t.weights[i * t.width + 2], 0.0);
  }
}

TEST(Interpolation, CoincidentPointCopiesFeature) {
  std::vector<Vec3> low{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  PointSet low_set(low, {1.0, 2.0, 3.0}, 1);
  auto up = interpolate_upsample(low_set, std::vector<Vec3>{{1, 0, 0}});
  EXPECT_NEAR(up[0], 2.0, 1e-9);
}

}  // namespace
}  // namespace hpenet
