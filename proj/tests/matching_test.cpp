/* Copyright 2026 The crossview Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "crossview/matching.hpp"
#include "oracles.hpp"

namespace crossview {
namespace {

MaskedMatrix<double> matrix(std::vector<std::vector<double>> rows) {
  MaskedMatrix<double> m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

TEST(Hungarian, Single) {
  const auto a = hungarian(matrix({{3}}));
  EXPECT_EQ(a.pairs, (Pairs{{0, 0}}));
  EXPECT_EQ(a.cost, 3.0);
}

TEST(Hungarian, TwoByTwo) {
  const auto a = hungarian(matrix({{1, 2}, {2, 1}}));
  EXPECT_EQ(a.pairs, (Pairs{{0, 0}, {1, 1}}));
  EXPECT_EQ(a.cost, 2.0);
}

TEST(Hungarian, ThreeByThree) {
  const auto a = hungarian(matrix({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}}));
  EXPECT_EQ(a.pairs, (Pairs{{0, 1}, {1, 0}, {2, 2}}));
  EXPECT_EQ(a.cost, 5.0);
}

TEST(Hungarian, RectangularReportsUnmatched) {
  const auto wide = hungarian(matrix({{5, 1, 9}}));
  EXPECT_EQ(wide.pairs, (Pairs{{0, 1}}));
  EXPECT_EQ(wide.unmatched_cols, (std::vector<std::size_t>{0, 2}));
  const auto tall = hungarian(matrix({{5}, {1}, {9}}));
  EXPECT_EQ(tall.pairs, (Pairs{{1, 0}}));
  EXPECT_EQ(tall.unmatched_rows, (std::vector<std::size_t>{0, 2}));
}

TEST(Hungarian, FullyMaskedMatchesNothing) {
  auto m = matrix({{1, 2}, {3, 4}});
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) m.mask(r, c);
  const auto a = hungarian(m);
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.unmatched_rows.size(), 2u);
  EXPECT_EQ(a.unmatched_cols.size(), 2u);
}

TEST(Hungarian, MaskForcesAlternative) {
  auto m = matrix({{0, 10}, {10, 0}});
  m.mask(0, 0);
  const auto a = hungarian(m);
  EXPECT_EQ(a.pairs, (Pairs{{0, 1}, {1, 0}}));
  EXPECT_EQ(a.cost, 20.0);
}

TEST(Hungarian, BruteForceFuzz) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 6), cost(0, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t r = static_cast<std::size_t>(dim(rng)), c = static_cast<std::size_t>(dim(rng));
    MaskedMatrix<double> m(r, c);
    const double p_mask = trial % 3 == 0 ? 0.0 : 0.4 * u(rng);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        m(i, j) = cost(rng);
        if (u(rng) < p_mask) m.mask(i, j);
      }
    const auto got = hungarian(m);
    const auto ref = oracle::brute_force_assignment(m);
    EXPECT_EQ(got.pairs.size(), ref.cardinality);
    EXPECT_EQ(got.cost, ref.cost);
    std::set<std::size_t> rows, cols;
    for (const auto& [i, j] : got.pairs) {
      EXPECT_TRUE(m.allowed(i, j));
      EXPECT_TRUE(rows.insert(i).second);
      EXPECT_TRUE(cols.insert(j).second);
    }
    EXPECT_EQ(got.pairs.size() + got.unmatched_rows.size(), r);
    EXPECT_EQ(got.pairs.size() + got.unmatched_cols.size(), c);
  }
}

Detection2D det(int cam, int cls, std::vector<double> e) {
  Detection2D d;
  d.camera_id = cam;
  d.class_id = cls;
  d.bbox = {0, 0, 10, 10};
  d.embedding = Embedding::Map(e.data(), static_cast<Eigen::Index>(e.size()));
  return d;
}

CameraRig rig_of(int n, std::vector<std::pair<int, int>> adjacency) {
  CameraRig rig;
  for (int i = 0; i < n; ++i)
    rig.cameras.push_back(make_yaw_camera(i, i * 1.0, 500, 500, 400, 300, 800, 600));
  rig.adjacency = std::move(adjacency);
  return rig;
}

TEST(DistanceMatrix, ClassGate) {
  const std::vector<Detection2D> a = {det(0, kCar, {0, 0}), det(0, kCar, {1, 1})};
  const std::vector<Detection2D> b = {det(1, kPedestrian, {0, 0})};
  auto m = build_distance_matrix(a, b);
  ASSERT_TRUE(m.ok());
  EXPECT_EQ(m->values.allowed_count(), 0u);
  EXPECT_TRUE(hungarian(m->values).pairs.empty());
}

TEST(DistanceMatrix, HandNorms) {
  const std::vector<Detection2D> a = {det(0, kCar, {0, 0, 1}), det(0, kCar, {2, 2, 2})};
  const std::vector<Detection2D> b = {det(1, kCar, {0, 1, 1}), det(1, kCar, {2, 2, 2})};
  auto m = build_distance_matrix(a, b);
  ASSERT_TRUE(m.ok());
  EXPECT_DOUBLE_EQ(m->values(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m->values(1, 1), 0.0);
}

TEST(DistanceMatrix, MissingEmbedding) {
  std::vector<Detection2D> a = {det(0, kCar, {0, 0})};
  a[0].embedding.reset();
  const std::vector<Detection2D> b = {det(1, kCar, {0, 0})};
  EXPECT_EQ(build_distance_matrix(a, b).code(), ErrorCode::kMissingEmbedding);
}

TEST(MatchAdjacent, AcceptsBelowTau) {
  const CameraRig rig = rig_of(2, {{0, 1}});
  const std::vector<Detection2D> d = {det(0, kCar, {0, 0}), det(1, kCar, {0.1, 0})};
  auto m = match_adjacent(rig, d, 0.7);
  ASSERT_TRUE(m.ok());
  ASSERT_EQ(m->pairs.size(), 1u);
  EXPECT_EQ(m->pairs[0].a, 0u);
  EXPECT_EQ(m->pairs[0].b, 1u);
  EXPECT_NEAR(m->pairs[0].distance, 0.1, 1e-15);
  EXPECT_TRUE(m->unmatched.empty());
}

TEST(MatchAdjacent, RejectsAboveTau) {
  const CameraRig rig = rig_of(2, {{0, 1}});
  const std::vector<Detection2D> d = {det(0, kCar, {0, 0}), det(1, kCar, {0.9, 0})};
  auto m = match_adjacent(rig, d, 0.7);
  ASSERT_TRUE(m.ok());
  EXPECT_TRUE(m->pairs.empty());
  EXPECT_EQ(m->unmatched, (std::vector<std::size_t>{0, 1}));
}

TEST(MatchAdjacent, NonAdjacentCamerasIgnored) {
  const CameraRig rig = rig_of(3, {{0, 1}});
  const std::vector<Detection2D> d = {det(0, kCar, {0, 0}), det(2, kCar, {0, 0})};
  auto m = match_adjacent(rig, d, 1.0);
  ASSERT_TRUE(m.ok());
  EXPECT_TRUE(m->pairs.empty());
}

TEST(MatchAdjacent, ConsumedDetectionsExcludedFromLaterPairs) {
  // Object seen by three cameras: camera 1's detection pairs with camera 0
  // first and is then unavailable to (1, 2).
  const CameraRig rig = rig_of(3, {{0, 1}, {1, 2}});
  const std::vector<Detection2D> d = {det(0, kCar, {0, 0}), det(1, kCar, {0, 0}),
                                      det(2, kCar, {0, 0})};
  auto m = match_adjacent(rig, d, 1.0);
  ASSERT_TRUE(m.ok());
  ASSERT_EQ(m->pairs.size(), 1u);
  EXPECT_EQ(m->pairs[0].camera_a, 0);
  EXPECT_EQ(m->unmatched, std::vector<std::size_t>{2});
}

TEST(MatchAdjacent, PartialMatchingAndScaleProperty) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> cam(0, 3), cls(1, 3);
  const CameraRig rig = rig_of(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Detection2D> d;
    for (int i = 0; i < 12; ++i) d.push_back(det(cam(rng), cls(rng), {n(rng), n(rng), n(rng)}));
    const double tau = 0.5 + std::abs(n(rng));
    auto m = match_adjacent(rig, d, tau);
    ASSERT_TRUE(m.ok());
    std::set<std::size_t> seen;
    for (const auto& p : m->pairs) {
      EXPECT_TRUE(seen.insert(p.a).second);
      EXPECT_TRUE(seen.insert(p.b).second);
      EXPECT_LE(p.distance, tau);
      EXPECT_EQ(d[p.a].class_id, d[p.b].class_id);
      EXPECT_TRUE(rig.adjacent(d[p.a].camera_id, d[p.b].camera_id));
    }
    // Scaling embeddings by c and tau by c keeps the same pairs. Powers of two
    // keep the arithmetic exact.
    const double c = 4.0;
    std::vector<Detection2D> scaled = d;
    for (auto& s : scaled) *s.embedding *= c;
    auto ms = match_adjacent(rig, scaled, tau * c);
    ASSERT_TRUE(ms.ok());
    ASSERT_EQ(ms->pairs.size(), m->pairs.size());
    for (std::size_t k = 0; k < m->pairs.size(); ++k) {
      EXPECT_EQ(ms->pairs[k].a, m->pairs[k].a);
      EXPECT_EQ(ms->pairs[k].b, m->pairs[k].b);
      EXPECT_DOUBLE_EQ(ms->pairs[k].distance, c * m->pairs[k].distance);
    }
  }
}

TEST(MatchAdjacent, InvalidTau) {
  const CameraRig rig = rig_of(2, {{0, 1}});
  EXPECT_EQ(match_adjacent(rig, std::vector<Detection2D>{}, 0.0).code(), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace crossview
