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

#include "crossview/scene_model.hpp"
#include "oracles.hpp"

namespace crossview {
namespace {

constexpr double kDeg = kPi / 180.0;

// Camera whose frame coincides with the vehicle frame.
CameraModel identity_camera() {
  CameraModel c;
  c.fx = c.fy = 100.0;
  c.cx = c.cy = 100.0;
  c.width = c.height = 200;
  return c;
}

CameraModel forward_camera(double hfov_deg, int width = 800, int height = 600, double yaw = 0.0) {
  const double f = 0.5 * width / std::tan(0.5 * hfov_deg * kDeg);
  return make_yaw_camera(0, yaw, f, f, 0.5 * width, 0.5 * height, width, height);
}

TEST(ProjectPoint, PrincipalPoint) {
  auto p = project_point(identity_camera(), {0, 0, 5});
  ASSERT_TRUE(p.ok());
  EXPECT_DOUBLE_EQ(p->pixel.x(), 100.0);
  EXPECT_DOUBLE_EQ(p->pixel.y(), 100.0);
  EXPECT_DOUBLE_EQ(p->depth, 5.0);
}

TEST(ProjectPoint, HandPinhole) {
  auto p = project_point(identity_camera(), {1, 0, 5});
  ASSERT_TRUE(p.ok());
  EXPECT_DOUBLE_EQ(p->pixel.x(), 120.0);
  EXPECT_DOUBLE_EQ(p->pixel.y(), 100.0);
  EXPECT_DOUBLE_EQ(p->depth, 5.0);
}

TEST(ProjectPoint, BehindCamera) {
  EXPECT_EQ(project_point(identity_camera(), {0, 0, -1}).code(), ErrorCode::kBehindCamera);
  EXPECT_EQ(project_point(identity_camera(), {0, 0, 1e-7}).code(), ErrorCode::kBehindCamera);
}

TEST(ProjectPoint, YawCameraAxes) {
  // Camera looking along vehicle +y: vehicle +x is image-right.
  const CameraModel c = make_yaw_camera(0, 0.5 * kPi, 100, 100, 100, 100, 200, 200);
  auto p = project_point(c, {-1, 5, 0});
  ASSERT_TRUE(p.ok());
  EXPECT_NEAR(p->pixel.x(), 80.0, 1e-12);
  EXPECT_NEAR(p->pixel.y(), 100.0, 1e-12);
  auto up = project_point(c, {0, 5, 1});
  ASSERT_TRUE(up.ok());
  EXPECT_LT(up->pixel.y(), 100.0);
}

TEST(ProjectPoint, RoundTripProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    CameraModel c = make_yaw_camera(1, kPi * u(rng), 500 + 100 * u(rng), 500 + 100 * u(rng),
                                    400 + 50 * u(rng), 300 + 50 * u(rng), 800, 600,
                                    Vec3(u(rng), u(rng), u(rng)));
    for (int k = 0; k < 20; ++k) {
      const Vec3 cam_pt(10 * u(rng), 10 * u(rng), 0.5 + 20 * (u(rng) + 1));
      const Vec3 p = c.to_vehicle(cam_pt);
      auto pr = project_point(c, p);
      ASSERT_TRUE(pr.ok());
      const Vec3 back = unproject(c, pr->pixel, pr->depth);
      EXPECT_LT((back - p).norm(), 1e-9);
    }
  }
}

TEST(Box3DToBBox2D, BehindCameraIsNone) {
  Box3D b{0, 0, -5, 1, 1, 1, 0};
  EXPECT_FALSE(box3d_to_bbox2d(identity_camera(), b).has_value());
}

TEST(Box3DToBBox2D, UnitCubeAhead) {
  // Identity camera: vehicle axes are camera axes, box "up" is camera z.
  CameraModel c = identity_camera();
  c.width = c.height = 1000;
  Box3D b{0, 0, 5, 1, 1, 1, 0};
  auto bb = box3d_to_bbox2d(c, b);
  ASSERT_TRUE(bb.has_value());
  EXPECT_NEAR(bb->x_min, 100.0 - 100.0 * 0.5 / 4.5, 1e-9);
  EXPECT_NEAR(bb->x_max, 100.0 + 100.0 * 0.5 / 4.5, 1e-9);
  EXPECT_NEAR(bb->y_min, 100.0 - 100.0 * 0.5 / 4.5, 1e-9);
  EXPECT_NEAR(bb->y_max, 100.0 + 100.0 * 0.5 / 4.5, 1e-9);
  EXPECT_NEAR(bb->x_min, 88.888888888888, 1e-9);
}

TEST(Box3DToBBox2D, ClippedToImage) {
  const CameraModel c = identity_camera();
  Box3D b{5.0, 0, 5, 1, 1, 1, 0};  // near face reaches u = 222
  auto bb = box3d_to_bbox2d(c, b);
  auto ref = oracle::projected_bbox(c, b);
  ASSERT_TRUE(bb && ref);
  EXPECT_DOUBLE_EQ(bb->x_max, 200.0);
  EXPECT_NEAR(bb->x_min, ref->x_min, 1e-9);
  EXPECT_NEAR(bb->y_min, ref->y_min, 1e-9);
  EXPECT_NEAR(bb->y_max, ref->y_max, 1e-9);
  auto proj = project_box(c, b);
  ASSERT_TRUE(proj);
  EXPECT_GT(proj->raw.x_max, 200.0);
  EXPECT_GT(proj->truncation, 0.0);
  EXPECT_LT(proj->truncation, 1.0);
}

TEST(Box3DToBBox2D, MatchesCornerOracleAndContainsCorners) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CameraModel c = forward_camera(70, 1600, 900, 0.3);
  int compared = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Box3D b{15 * u(rng), 15 * u(rng), u(rng), 1 + u(rng) * 0.5 + 1, 1.5, 1.6, kPi * u(rng)};
    auto got = box3d_to_bbox2d(c, b);
    auto ref = oracle::projected_bbox(c, b);
    ASSERT_EQ(got.has_value(), ref.has_value());
    if (!got) continue;
    ++compared;
    EXPECT_NEAR(got->x_min, ref->x_min, 1e-7);
    EXPECT_NEAR(got->x_max, ref->x_max, 1e-7);
    EXPECT_NEAR(got->y_min, ref->y_min, 1e-7);
    EXPECT_NEAR(got->y_max, ref->y_max, 1e-7);
    auto raw = project_box(c, b);
    ASSERT_TRUE(raw);
    for (const Vec3& corner : b.corners()) {
      auto p = project_point(c, corner);
      if (!p) continue;
      EXPECT_TRUE(raw->raw.contains(p->pixel.x(), p->pixel.y()));
    }
  }
  EXPECT_GT(compared, 50);
}

TEST(AngularExtent, FullWidthSymmetric) {
  const CameraModel c = forward_camera(90);
  const AngularExtent e = angular_extent(c, {0, 0, 800, 600});
  EXPECT_NEAR(e.min, -45 * kDeg, 1e-12);
  EXPECT_NEAR(e.max, 45 * kDeg, 1e-12);
}

TEST(AngularExtent, VerticalLineAtPrincipalPoint) {
  const CameraModel c = forward_camera(90, 800, 600, 0.7);
  const AngularExtent e = angular_extent(c, {400, 100, 400, 500});
  EXPECT_NEAR(e.min, 0.7, 1e-12);
  EXPECT_NEAR(e.max, 0.7, 1e-12);
  EXPECT_NEAR(e.width(), 0.0, 1e-12);
}

TEST(AngularExtent, RightHalfIsNegativeAzimuth) {
  const CameraModel c = forward_camera(90);
  const AngularExtent e = angular_extent(c, {400, 0, 800, 600});
  EXPECT_NEAR(e.min, -45 * kDeg, 1e-12);
  EXPECT_NEAR(e.max, 0.0, 1e-12);
}

TEST(AngularExtent, EdgeRaysMatchRayCasting) {
  // The ray through an edge pixel, cast to the ground plane, has the edge's
  // azimuth.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const CameraModel c = forward_camera(40 + 100 * u(rng), 800, 600, kPi * (2 * u(rng) - 1));
    double x0 = 800 * u(rng), x1 = 800 * u(rng);
    if (x0 > x1) std::swap(x0, x1);
    const AngularExtent e = angular_extent(c, {x0, 100, x1, 500});
    const oracle::Pinhole ph(c);
    auto ray_az = [&](double px) {
      const Vec3 dir = ph.r_cam_to_vehicle * Vec3((px - c.cx) / c.fx, 0.0, 1.0);
      return std::atan2(dir.y(), dir.x());
    };
    EXPECT_NEAR(normalize_angle(e.max - ray_az(x0)), 0.0, 1e-12);
    EXPECT_NEAR(normalize_angle(e.min - ray_az(x1)), 0.0, 1e-12);
    EXPECT_LE(e.width(), c.hfov() + 1e-12);
  }
}

TEST(Angles, NormalizeToHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
  EXPECT_NEAR(normalize_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(circular_mean(170 * kDeg, -160 * kDeg), -175 * kDeg, 1e-12);
}

TEST(CameraModel, InvariantsChecked) {
  CameraModel c = identity_camera();
  EXPECT_FALSE(c.check());
  c.fx = 0;
  EXPECT_TRUE(c.check());
  c = identity_camera();
  c.pose.rotation = Eigen::Quaterniond(1.0, 0.1, 0, 0);
  EXPECT_TRUE(c.check());
}

TEST(CameraRig, AdjacencyValidation) {
  CameraRig rig;
  rig.cameras = {forward_camera(90), forward_camera(90)};
  rig.cameras[1].id = 1;
  rig.adjacency = {{0, 1}};
  EXPECT_FALSE(rig.check());
  EXPECT_TRUE(rig.adjacent(1, 0));
  rig.adjacency = {{0, 0}};
  EXPECT_TRUE(rig.check());
  rig.adjacency = {{0, 5}};
  EXPECT_TRUE(rig.check());
}

TEST(Box3D, ContainsAndCorners) {
  Box3D b{1, 2, 0, 4, 2, 1, 0.5};
  EXPECT_TRUE(b.contains(b.center()));
  for (const Vec3& c : b.corners()) EXPECT_TRUE(b.contains(c, 1e-9));
  const auto ref = oracle::corners(b);
  const auto got = b.corners();
  for (const Vec3& r : ref) {
    double best = 1e9;
    for (const Vec3& g : got) best = std::min(best, (r - g).norm());
    EXPECT_LT(best, 1e-12);
  }
  EXPECT_FALSE(b.contains({1 + 3 * std::cos(0.5), 2 + 3 * std::sin(0.5), 0}));
}

}  // namespace
}  // namespace crossview
