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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "crossview/metrics.hpp"
#include "oracles.hpp"

namespace crossview {
namespace {

constexpr double kDeg = kPi / 180.0;

TEST(Iou2D, HandCases) {
  EXPECT_DOUBLE_EQ(iou2d({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(iou2d({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
  EXPECT_DOUBLE_EQ(iou2d({0, 0, 2, 2}, {1, 0, 3, 2}), 1.0 / 3.0);
}

Detection2DRecord rec(double score, BBox2D b, int cls = kCar, int frame = 0, int cam = 0) {
  return {frame, cam, cls, score, b};
}

GroundTruth2D gt2(BBox2D b, int cls = kCar, int frame = 0, int cam = 0) {
  GroundTruth2D g;
  g.frame = frame;
  g.camera_id = cam;
  g.class_id = cls;
  g.bbox = b;
  return g;
}

TEST(Ap2D, PerfectAndEmpty) {
  const std::vector<GroundTruth2D> gts = {gt2({0, 0, 50, 50}), gt2({100, 0, 150, 50})};
  const std::vector<Detection2DRecord> dets = {rec(0.9, {0, 0, 50, 50}), rec(0.8, {100, 0, 150, 50})};
  EXPECT_DOUBLE_EQ(ap_2d(dets, gts, {})[kCar], 1.0);
  EXPECT_DOUBLE_EQ(ap_2d(std::vector<Detection2DRecord>{}, gts, {})[kCar], 0.0);
}

TEST(Ap2D, ThreeDetectionsTwoTruths) {
  const std::vector<GroundTruth2D> gts = {gt2({0, 0, 50, 50}), gt2({100, 0, 150, 50})};
  const std::vector<Detection2DRecord> dets = {rec(0.9, {0, 0, 50, 50}), rec(0.8, {300, 0, 350, 50}),
                                               rec(0.7, {100, 0, 150, 50})};
  const auto curve = pr_curve_2d(dets, gts, kCar, {});
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_DOUBLE_EQ(curve[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(curve[0].recall, 0.5);
  EXPECT_DOUBLE_EQ(curve[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(curve[1].recall, 0.5);
  EXPECT_DOUBLE_EQ(curve[2].precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve[2].recall, 1.0);
  // Recall samples 1..20 see precision 1, samples 21..40 see 2/3.
  EXPECT_NEAR(ap_r40(curve), (20.0 + 20.0 * 2.0 / 3.0) / 40.0, 1e-12);
  EXPECT_NEAR(ap_2d(dets, gts, {})[kCar], 0.8333333333, 1e-9);
  // All-point oracle differs from R40 by at most one recall step.
  EXPECT_LE(std::abs(ap_r40(curve) - oracle::ap2d_sweep(dets, gts, kCar, {})), 1.0 / 40.0 + 1e-12);
}

TEST(Ap2D, IgnoredTruthNeitherHelpsNorHurts) {
  GroundTruth2D small = gt2({0, 0, 50, 10});  // height 10 < 25
  GroundTruth2D cut = gt2({100, 0, 150, 50});
  cut.truncation = 0.5;
  const std::vector<GroundTruth2D> gts = {small, cut, gt2({200, 0, 250, 50})};
  const std::vector<Detection2DRecord> dets = {rec(0.9, {0, 0, 50, 10}), rec(0.8, {100, 0, 150, 50}),
                                               rec(0.7, {200, 0, 250, 50})};
  EXPECT_DOUBLE_EQ(ap_2d(dets, gts, {})[kCar], 1.0);
  const auto curve = pr_curve_2d(dets, gts, kCar, {});
  EXPECT_EQ(curve.size(), 1u);
}

TEST(Ap2D, IouBelowThresholdIsFalsePositive) {
  const std::vector<GroundTruth2D> gts = {gt2({0, 0, 2, 40})};
  const std::vector<Detection2DRecord> dets = {rec(0.9, {1, 0, 3, 40})};  // IoU 1/3
  EXPECT_DOUBLE_EQ(ap_2d(dets, gts, {})[kCar], 0.0);
}

struct Instance2D {
  std::vector<Detection2DRecord> dets;
  std::vector<GroundTruth2D> gts;
};

Instance2D random_instance_2d(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> n_gt(0, 8), n_fp(0, 5), frame(0, 2), cam(0, 1), cls(1, 2);
  Instance2D inst;
  const int g = n_gt(rng);
  for (int i = 0; i < g; ++i) {
    const double x = 400 * u(rng), y = 300 * u(rng), w = 10 + 80 * u(rng), h = 10 + 80 * u(rng);
    GroundTruth2D gt = gt2({x, y, x + w, y + h}, cls(rng), frame(rng), cam(rng));
    gt.truncation = u(rng) < 0.15 ? 0.6 : 0.1 * u(rng);
    inst.gts.push_back(gt);
    if (u(rng) < 0.8) {
      const double dx = 0.2 * w * (u(rng) - 0.5), dy = 0.2 * h * (u(rng) - 0.5);
      inst.dets.push_back(rec(u(rng), {x + dx, y + dy, x + w + dx, y + h + dy}, gt.class_id,
                              gt.frame, gt.camera_id));
    }
  }
  const int f = n_fp(rng);
  for (int i = 0; i < f; ++i) {
    const double x = 400 * u(rng), y = 300 * u(rng), w = 10 + 80 * u(rng), h = 10 + 80 * u(rng);
    inst.dets.push_back(rec(u(rng), {x, y, x + w, y + h}, cls(rng), frame(rng), cam(rng)));
  }
  return inst;
}

TEST(Ap2D, WithinR40BoundOfAllPointOracle) {
  std::mt19937_64 rng(2);
  const EvalConfig2D cfg;
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Instance2D inst = random_instance_2d(rng);
    const auto got = ap_2d(inst.dets, inst.gts, cfg);
    for (int c : {kCar, kPedestrian}) {
      const double ref = oracle::ap2d_sweep(inst.dets, inst.gts, c, cfg);
      if (!got.count(c)) {
        EXPECT_EQ(ref, 0.0);
        continue;
      }
      ++compared;
      EXPECT_LE(std::abs(got.at(c) - ref), 1.0 / 40.0 + 1e-12) << "trial " << trial;
      EXPECT_GE(got.at(c), 0.0);
      EXPECT_LE(got.at(c), 1.0);
    }
  }
  EXPECT_GT(compared, 200);
}

TEST(Ap2D, MonotoneScoreTransformInvariance) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Instance2D inst = random_instance_2d(rng);
    const auto before = ap_2d(inst.dets, inst.gts, {});
    for (auto& d : inst.dets) d.score = std::exp(5.0 * d.score) - 40.0;
    EXPECT_EQ(ap_2d(inst.dets, inst.gts, {}), before);
  }
}

TEST(Ap2D, DuplicatesKeepRecallAndNeverRaisePrecision) {
  std::mt19937_64 rng(4);
  EvalConfig2D cfg;
  cfg.min_height_px = 0.0;
  cfg.max_truncation = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    Instance2D inst = random_instance_2d(rng);
    std::vector<Detection2DRecord> doubled = inst.dets;
    doubled.insert(doubled.end(), inst.dets.begin(), inst.dets.end());
    for (int c : {kCar, kPedestrian}) {
      const auto a = pr_curve_2d(inst.dets, inst.gts, c, cfg);
      const auto b = pr_curve_2d(doubled, inst.gts, c, cfg);
      ASSERT_EQ(b.size(), 2 * a.size());
      // Scores are distinct, so operating point k keeps 2k duplicated detections.
      for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_DOUBLE_EQ(b[2 * k + 1].recall, a[k].recall);
        EXPECT_LE(b[2 * k + 1].precision, a[k].precision + 1e-15);
      }
    }
  }
}

GtBox3D gt3(double x, double y, int cls = kCar, int frame = 0) {
  return {frame, cls, Box3D{x, y, 0.8, 4.0, 1.8, 1.6, 0.0}, 0};
}

ScoredBox3D pred3(double score, double x, double y, int cls = kCar, int frame = 0) {
  return {frame, cls, score, Box3D{x, y, 0.8, 4.0, 1.8, 1.6, 0.0}};
}

TEST(Match3D, HandCases) {
  const std::vector<GtBox3D> gt = {gt3(0, 0)};
  const std::vector<ScoredBox3D> far = {pred3(0.9, 3, 4)};
  EXPECT_TRUE(match_3d(far, gt, 4.0).empty());
  EXPECT_EQ(match_3d(far, gt, 5.0).size(), 1u);
  const std::vector<ScoredBox3D> same = {pred3(0.9, 0, 0)};
  EXPECT_EQ(match_3d(same, gt, 1e-9).size(), 1u);
  const std::vector<ScoredBox3D> two = {pred3(0.5, 0.1, 0), pred3(0.9, 0.4, 0)};
  const auto m = match_3d(two, gt, 2.0);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].det, 1u);
}

TEST(TpErrors, HandCases) {
  const Box3D a{1, 2, 0, 4, 2, 2, 0.3};
  const std::vector<std::pair<Box3D, Box3D>> same = {{a, a}};
  auto e = tp_errors(same);
  ASSERT_TRUE(e.ok());
  EXPECT_DOUBLE_EQ(e->ate, 0.0);
  EXPECT_DOUBLE_EQ(e->ase, 0.0);
  EXPECT_DOUBLE_EQ(e->aoe, 0.0);

  Box3D rotated = a;
  rotated.theta += kPi / 4;
  const std::vector<std::pair<Box3D, Box3D>> yaw = {{rotated, a}};
  EXPECT_NEAR(tp_errors(yaw)->aoe, kPi / 4, 1e-12);

  const Box3D small{1, 2, 0, 2, 2, 2, 0.3};
  const std::vector<std::pair<Box3D, Box3D>> size = {{small, a}};
  EXPECT_DOUBLE_EQ(tp_errors(size)->ase, 0.5);
  EXPECT_DOUBLE_EQ(tp_errors(size)->ase_percent(), 50.0);

  EXPECT_EQ(tp_errors({}).code(), ErrorCode::kNoMatches);
}

TEST(TpErrors, Ranges) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Box3D p{5 * u(rng), 5 * u(rng), u(rng), 2 + u(rng), 2 + u(rng), 2 + u(rng), 4 * u(rng)};
    const Box3D g{5 * u(rng), 5 * u(rng), u(rng), 2 + u(rng), 2 + u(rng), 2 + u(rng), 4 * u(rng)};
    const std::vector<std::pair<Box3D, Box3D>> v = {{p, g}};
    const auto e = *tp_errors(v);
    EXPECT_GE(e.ate, 0.0);
    EXPECT_GE(e.ase, 0.0);
    EXPECT_LE(e.ase, 1.0);
    EXPECT_GE(e.aoe, 0.0);
    EXPECT_LE(e.aoe, kPi);
  }
}

TEST(Ap3D, PerfectAndEmpty) {
  const std::vector<GtBox3D> gt = {gt3(0, 0), gt3(10, 0), gt3(0, 10, kCar, 1)};
  const std::vector<ScoredBox3D> dets = {pred3(0.9, 0, 0), pred3(0.8, 10, 0), pred3(0.7, 0, 10, kCar, 1)};
  const auto m = ap_3d(dets, gt, {});
  EXPECT_DOUBLE_EQ(m.at(kCar).ap, 1.0);
  EXPECT_EQ(m.count(kPedestrian), 0u);
  EXPECT_DOUBLE_EQ(ap_3d(std::vector<ScoredBox3D>{}, gt, {}).at(kCar).ap, 0.0);
  EXPECT_FALSE(ap_3d(std::vector<ScoredBox3D>{}, gt, {}).at(kCar).errors.has_value());
}

TEST(Ap3D, ToyCaseMatchesOracle) {
  const std::vector<GtBox3D> gt = {gt3(0, 0), gt3(10, 0)};
  const std::vector<ScoredBox3D> dets = {pred3(0.9, 0.3, 0), pred3(0.8, 30, 0), pred3(0.7, 10, 1.5)};
  const EvalConfig3D cfg;
  const auto m = ap_3d(dets, gt, cfg);
  double ref = 0.0;
  for (double t : cfg.center_distance_thresholds) ref += oracle::ap3d_sweep(dets, gt, kCar, t);
  ref /= static_cast<double>(cfg.center_distance_thresholds.size());
  EXPECT_NEAR(m.at(kCar).ap, ref, 1e-9);
}

TEST(Ap3D, RandomInstancesMatchOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const EvalConfig3D cfg;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GtBox3D> gt;
    std::vector<ScoredBox3D> dets;
    const int n = 1 + static_cast<int>(8 * u(rng));
    for (int i = 0; i < n; ++i) {
      const int cls = 1 + static_cast<int>(2 * u(rng));
      const int frame = static_cast<int>(3 * u(rng));
      gt.push_back(gt3(40 * u(rng), 40 * u(rng), cls, frame));
      if (u(rng) < 0.8)
        dets.push_back(pred3(u(rng), gt.back().box.x + noise(rng), gt.back().box.y + noise(rng), cls, frame));
    }
    for (int i = 0; i < 3; ++i)
      dets.push_back(pred3(u(rng), 40 * u(rng), 40 * u(rng), 1 + static_cast<int>(2 * u(rng)),
                           static_cast<int>(3 * u(rng))));
    const auto m = ap_3d(dets, gt, cfg);
    for (const auto& [c, metrics] : m) {
      ASSERT_EQ(metrics.ap_per_threshold.size(), cfg.center_distance_thresholds.size());
      for (std::size_t t = 0; t < cfg.center_distance_thresholds.size(); ++t)
        EXPECT_NEAR(metrics.ap_per_threshold[t],
                    oracle::ap3d_sweep(dets, gt, c, cfg.center_distance_thresholds[t]), 1e-9);
      EXPECT_GE(metrics.ap, 0.0);
      EXPECT_LE(metrics.ap, 1.0);
    }

    // Strictly monotone score transform leaves every AP unchanged.
    std::vector<ScoredBox3D> warped = dets;
    for (auto& d : warped) d.score = std::log(d.score + 0.01) * 3.0;
    const auto w = ap_3d(warped, gt, cfg);
    for (const auto& [c, metrics] : m) EXPECT_EQ(w.at(c).ap, metrics.ap);
  }
}

CameraRig two_camera_rig() {
  // hfov 90 at yaw 0 and 80 degrees: shared wedge is [35, 45] degrees.
  CameraRig rig;
  rig.cameras = {make_yaw_camera(0, 0.0, 400, 400, 400, 300, 800, 600),
                 make_yaw_camera(1, 80 * kDeg, 400, 400, 400, 300, 800, 600)};
  rig.adjacency = {{0, 1}};
  return rig;
}

Box3D at_azimuth(double deg, double range = 20.0) {
  return {range * std::cos(deg * kDeg), range * std::sin(deg * kDeg), 0.0, 0.6, 0.6, 1.7, 0.0};
}

TEST(OverlapRegion, HandCases) {
  const CameraRig rig = two_camera_rig();
  const std::vector<Box3D> boxes = {at_azimuth(0), at_azimuth(40), at_azimuth(-120)};
  EXPECT_EQ(overlap_region_filter(rig, boxes), std::vector<std::size_t>{1});
  EXPECT_TRUE(overlap_region_filter(rig, std::vector<Box3D>{}).empty());
}

TEST(OverlapRegion, MatchesProjectionOracle) {
  const CameraRig rig = two_camera_rig();
  for (double deg = -180; deg < 180; deg += 0.5) {
    const Box3D b = at_azimuth(deg, 15.0);
    std::size_t visible = 0;
    for (const auto& cam : rig.cameras) visible += oracle::projected_bbox(cam, b).has_value();
    EXPECT_EQ(visible_camera_count(rig, b), visible) << deg;
  }
  // The boundary azimuth of camera 0 sits inside camera 1.
  EXPECT_EQ(visible_camera_count(rig, at_azimuth(45.0)), 2u);
}

}  // namespace
}  // namespace crossview
