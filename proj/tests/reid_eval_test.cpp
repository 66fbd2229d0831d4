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

#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "crossview/reid_eval.hpp"

namespace crossview {
namespace {

Detection2D det(int cam, int cls, std::int64_t uid) {
  Detection2D d;
  d.camera_id = cam;
  d.class_id = cls;
  d.bbox = {0, 0, 1, 1};
  d.truth_uid = uid;
  return d;
}

CameraRig two_cameras() {
  CameraRig rig;
  rig.cameras = {make_yaw_camera(0, 0.0, 400, 400, 400, 300, 800, 600),
                 make_yaw_camera(1, 1.0, 400, 400, 400, 300, 800, 600)};
  rig.adjacency = {{0, 1}};
  return rig;
}

MatchResult produced(std::vector<std::pair<std::size_t, std::size_t>> pairs,
                     std::span<const Detection2D> d) {
  MatchResult m;
  for (auto [a, b] : pairs) m.pairs.push_back({a, b, d[a].camera_id, d[b].camera_id, 0.0});
  return m;
}

TEST(EvaluateFrame, PerfectMatches) {
  const std::vector<Detection2D> d = {det(0, kCar, 1), det(0, kCar, 2), det(1, kCar, 1),
                                      det(1, kCar, 2)};
  auto s = evaluate_frame(produced({{0, 2}, {1, 3}}, d), d, two_cameras());
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->tp, 2);
  EXPECT_EQ(s->fp, 0);
  EXPECT_EQ(s->fn, 0);
  EXPECT_EQ(s->tn, 2);
  EXPECT_DOUBLE_EQ(s->precision, 1.0);
  EXPECT_DOUBLE_EQ(s->recall, 1.0);
  EXPECT_DOUBLE_EQ(s->f_score, 1.0);
}

TEST(EvaluateFrame, SingleFalsePair) {
  const std::vector<Detection2D> d = {det(0, kCar, 1), det(1, kCar, 2)};
  auto s = evaluate_frame(produced({{0, 1}}, d), d, two_cameras());
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->tp, 0);
  EXPECT_EQ(s->fp, 1);
  EXPECT_EQ(s->fn, 0);
  EXPECT_DOUBLE_EQ(s->precision, 0.0);
  EXPECT_DOUBLE_EQ(s->recall, 0.0);
  EXPECT_DOUBLE_EQ(s->f_score, 0.0);
}

TEST(EvaluateFrame, OneFoundOneMissed) {
  const std::vector<Detection2D> d = {det(0, kCar, 1), det(0, kPedestrian, 2), det(1, kCar, 1),
                                      det(1, kPedestrian, 2)};
  auto s = evaluate_frame(produced({{0, 2}}, d), d, two_cameras());
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->tp, 1);
  EXPECT_EQ(s->fn, 1);
  EXPECT_EQ(s->fp, 0);
  EXPECT_EQ(s->tn, 0);
  EXPECT_DOUBLE_EQ(s->recall, 0.5);
}

TEST(EvaluateFrame, MissingTruth) {
  std::vector<Detection2D> d = {det(0, kCar, 1), det(1, kCar, 1)};
  d[1].truth_uid.reset();
  EXPECT_EQ(evaluate_frame(MatchResult{}, d, two_cameras()).code(), ErrorCode::kMissingTruth);
}

TEST(EvaluateFrame, CountingProperties) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> cam(0, 3), uid(0, 5), n(0, 14);
  CameraRig rig;
  for (int i = 0; i < 4; ++i)
    rig.cameras.push_back(make_yaw_camera(i, 1.5 * i, 400, 400, 400, 300, 800, 600));
  rig.adjacency = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Detection2D> d;
    const int count = n(rng);
    // Class follows uid so same-uid pairs always agree on class.
    for (int i = 0; i < count; ++i) {
      const int u = uid(rng);
      d.push_back(det(cam(rng), 1 + u % 3, u));
    }
    // Random valid partial matching over adjacent cameras.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::set<std::size_t> used;
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (used.count(i) || used.count(j) || i == j) continue;
        if (!rig.adjacent(d[i].camera_id, d[j].camera_id)) continue;
        if (d[i].class_id != d[j].class_id || rng() % 2) continue;
        pairs.emplace_back(i, j);
        used.insert(i);
        used.insert(j);
      }
    auto s = evaluate_frame(produced(pairs, d), d, rig);
    ASSERT_TRUE(s.ok());
    EXPECT_EQ(s->tp + s->fp, static_cast<std::int64_t>(pairs.size()));

    // Ground-truth identity pairs over adjacent camera pairs, counted by uid.
    std::int64_t gt_pairs = 0;
    for (const auto& [a, b] : rig.adjacency)
      for (const auto& x : d)
        for (const auto& y : d)
          if (x.camera_id == a && y.camera_id == b && *x.truth_uid == *y.truth_uid) ++gt_pairs;
    EXPECT_EQ(s->tp + s->fn, gt_pairs);
  }
}

TEST(Accumulate, Empty) {
  const ReidStats s = accumulate({});
  EXPECT_EQ(s, ReidStats{});
}

TEST(Accumulate, TwoFrames) {
  ReidStats a, b;
  a.tp = 1;
  a.fp = 1;
  b.tp = 1;
  b.fn = 1;
  a.finalize();
  b.finalize();
  const std::vector<ReidStats> v = {a, b};
  const ReidStats s = accumulate(v);
  EXPECT_EQ(s.tp, 2);
  EXPECT_EQ(s.fp, 1);
  EXPECT_EQ(s.fn, 1);
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 2.0 / 3.0);
}

TEST(Accumulate, IdentityAndOrderIndependence) {
  ReidStats s;
  s.tp = 4;
  s.tn = 9;
  s.fp = 2;
  s.fn = 3;
  s.finalize();
  const std::vector<ReidStats> one = {s};
  EXPECT_EQ(accumulate(one), s);
  ReidStats t;
  t.tp = 1;
  t.tn = 5;
  t.finalize();
  const std::vector<ReidStats> ab = {s, t}, ba = {t, s};
  EXPECT_EQ(accumulate(ab), accumulate(ba));
}

}  // namespace
}  // namespace crossview
