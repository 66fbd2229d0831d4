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

// Core domain types and pinhole geometry.
//
// Frames:
//   vehicle: x forward, y left, z up. Azimuth = atan2(y, x), counterclockwise.
//   camera:  +z optical axis, +x right, +y down.
// CameraModel::pose maps camera coordinates into the vehicle frame.

#ifndef CROSSVIEW_SCENE_MODEL_HPP_
#define CROSSVIEW_SCENE_MODEL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "crossview/result.hpp"

namespace crossview {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Embedding = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDepthEpsilon = 1e-6;

// ---------------------------------------------------------------------------
// Angles

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Circular mean of two azimuths via unit-vector averaging.
inline double circular_mean(double a, double b) {
  return normalize_angle(std::atan2(std::sin(a) + std::sin(b),
                                    std::cos(a) + std::cos(b)));
}

/// Counterclockwise distance from `from` to `to`, in [0, 2pi).
inline double ccw_distance(double from, double to) {
  double d = std::fmod(to - from, 2.0 * kPi);
  if (d < 0.0) d += 2.0 * kPi;
  return d;
}

/// Interval on the circle traversed counterclockwise from `min` to `max`.
struct AngularExtent {
  double min = 0.0;
  double max = 0.0;

  double width() const { return ccw_distance(min, max); }
  double midpoint() const { return normalize_angle(min + 0.5 * width()); }
};

// ---------------------------------------------------------------------------
// Classes

enum ClassId : int {
  kBackground = 0,
  kCar = 1,
  kPedestrian = 2,
  kCyclist = 3,
};

inline constexpr std::array<int, 3> kObjectClasses = {kCar, kPedestrian,
                                                      kCyclist};

inline std::string_view class_name(int class_id) {
  switch (class_id) {
    case kBackground: return "background";
    case kCar: return "car";
    case kPedestrian: return "pedestrian";
    case kCyclist: return "cyclist";
    default: return "unknown";
  }
}

inline std::optional<int> class_from_name(std::string_view name) {
  if (name == "car") return kCar;
  if (name == "pedestrian") return kPedestrian;
  if (name == "cyclist") return kCyclist;
  if (name == "background") return kBackground;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cameras

struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();
};

struct CameraModel {
  int id = 0;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Pose pose;

  std::optional<Error> check() const {
    if (!(fx > 0.0 && fy > 0.0))
      return make_error(ErrorCode::kInvalidArgument, "focal lengths must be > 0");
    if (width <= 0 || height <= 0)
      return make_error(ErrorCode::kInvalidArgument, "image size must be > 0");
    if (std::abs(pose.rotation.norm() - 1.0) > 1e-9)
      return make_error(ErrorCode::kInvalidArgument, "pose quaternion is not unit");
    return std::nullopt;
  }

  Vec3 to_camera(const Vec3& p_vehicle) const {
    return pose.rotation.conjugate() * (p_vehicle - pose.translation);
  }
  Vec3 to_vehicle(const Vec3& p_camera) const {
    return pose.rotation * p_camera + pose.translation;
  }

  /// Horizontal field of view, radians.
  double hfov() const {
    return std::atan(cx / fx) + std::atan((width - cx) / fx);
  }
};

/// Builds a camera at `position` whose optical axis points at azimuth `yaw`
/// in the horizontal plane, with image-down mapped to vehicle -z.
inline CameraModel make_yaw_camera(int id, double yaw, double fx, double fy,
                                   double cx, double cy, int width, int height,
                                   const Vec3& position = Vec3::Zero()) {
  Eigen::Matrix3d r;
  // Columns are the camera axes expressed in the vehicle frame.
  r.col(0) = Vec3(std::sin(yaw), -std::cos(yaw), 0.0);  // +x right
  r.col(1) = Vec3(0.0, 0.0, -1.0);                      // +y down
  r.col(2) = Vec3(std::cos(yaw), std::sin(yaw), 0.0);   // +z forward
  CameraModel cam;
  cam.id = id;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  cam.pose.rotation = Eigen::Quaterniond(r).normalized();
  cam.pose.translation = position;
  return cam;
}

struct CameraRig {
  std::vector<CameraModel> cameras;
  std::vector<std::pair<int, int>> adjacency;

  const CameraModel* find(int id) const {
    for (const auto& c : cameras)
      if (c.id == id) return &c;
    return nullptr;
  }

  bool adjacent(int a, int b) const {
    for (const auto& [p, q] : adjacency)
      if ((p == a && q == b) || (p == b && q == a)) return true;
    return false;
  }

  std::optional<Error> check() const {
    for (std::size_t i = 0; i < cameras.size(); ++i) {
      if (auto e = cameras[i].check()) return e;
      for (std::size_t j = i + 1; j < cameras.size(); ++j)
        if (cameras[i].id == cameras[j].id)
          return make_error(ErrorCode::kInvalidArgument, "duplicate camera id");
    }
    for (const auto& [a, b] : adjacency) {
      if (a == b)
        return make_error(ErrorCode::kInvalidArgument, "self adjacency");
      if (!find(a) || !find(b))
        return make_error(ErrorCode::kInvalidArgument,
                          "adjacency references unknown camera");
    }
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// Boxes and scene content

struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;
  double l = 1.0, w = 1.0, h = 1.0;
  double theta = 0.0;

  Vec3 center() const { return {x, y, z}; }

  /// Corner order: bottom face counterclockwise starting at (+l/2, +w/2),
  /// then the same four on the top face.
  std::array<Vec3, 8> corners() const {
    const double c = std::cos(theta), s = std::sin(theta);
    std::array<Vec3, 8> out;
    const double hl = 0.5 * l, hw = 0.5 * w, hh = 0.5 * h;
    const std::array<Vec2, 4> local = {Vec2(hl, hw), Vec2(-hl, hw),
                                       Vec2(-hl, -hw), Vec2(hl, -hw)};
    for (int k = 0; k < 4; ++k) {
      const double dx = c * local[k].x() - s * local[k].y();
      const double dy = s * local[k].x() + c * local[k].y();
      out[k] = Vec3(x + dx, y + dy, z - hh);
      out[k + 4] = Vec3(x + dx, y + dy, z + hh);
    }
    return out;
  }

  /// Point expressed in the box frame (origin at center, x along heading).
  Vec3 to_local(const Vec3& p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = p.x() - x, dy = p.y() - y;
    return {c * dx + s * dy, -s * dx + c * dy, p.z() - z};
  }

  bool contains(const Vec3& p, double inflate = 0.0) const {
    const Vec3 q = to_local(p);
    return std::abs(q.x()) <= 0.5 * l + inflate &&
           std::abs(q.y()) <= 0.5 * w + inflate &&
           std::abs(q.z()) <= 0.5 * h + inflate;
  }

  bool valid() const {
    return l > 0.0 && w > 0.0 && h > 0.0 && std::isfinite(x) &&
           std::isfinite(y) && std::isfinite(z) && std::isfinite(theta);
  }

  bool operator==(const Box3D&) const = default;
};

struct SceneObject {
  std::int64_t uid = 0;
  int class_id = kCar;
  Box3D box;

  bool operator==(const SceneObject&) const = default;
};

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  bool operator==(const PointCloud&) const = default;
};

struct BBox2D {
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }
  bool contains(double u, double v) const {
    return u >= x_min && u <= x_max && v >= y_min && v <= y_max;
  }

  bool operator==(const BBox2D&) const = default;
};

/// Intersection over union; 0 when the union is degenerate.
inline double iou2d(const BBox2D& a, const BBox2D& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = iw > 0.0 && ih > 0.0 ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct Detection2D {
  int camera_id = 0;
  BBox2D bbox;
  int class_id = kCar;
  double score = 1.0;
  std::optional<Embedding> embedding;
  std::optional<std::int64_t> truth_uid;
};

struct Frame {
  int index = 0;
  std::vector<SceneObject> objects;
  PointCloud lidar;

  bool operator==(const Frame&) const = default;
};

struct Scene {
  CameraRig rig;
  std::vector<Frame> frames;
};

// ---------------------------------------------------------------------------
// Projection

struct PixelProjection {
  Vec2 pixel;
  double depth = 0.0;
};

inline Result<PixelProjection> project_point(const CameraModel& cam,
                                             const Vec3& p_vehicle) {
  const Vec3 pc = cam.to_camera(p_vehicle);
  if (pc.z() <= kDepthEpsilon)
    return make_error(ErrorCode::kBehindCamera, "depth <= epsilon");
  return PixelProjection{
      Vec2(cam.cx + cam.fx * pc.x() / pc.z(), cam.cy + cam.fy * pc.y() / pc.z()),
      pc.z()};
}

/// Inverse of project_point for a pixel at a known depth.
inline Vec3 unproject(const CameraModel& cam, const Vec2& pixel, double depth) {
  const Vec3 pc((pixel.x() - cam.cx) / cam.fx * depth,
                (pixel.y() - cam.cy) / cam.fy * depth, depth);
  return cam.to_vehicle(pc);
}

/// Projected extent of a box before and after clipping to the image.
struct BoxProjection {
  BBox2D raw;
  BBox2D clipped;
  double truncation = 0.0;  // 1 - clipped area / raw area
};

/// Min/max over the projections of the corners with positive depth, plus the
/// clipped version. nullopt when no corner is in front of the camera or the
/// clipped area is zero.
inline std::optional<BoxProjection> project_box(const CameraModel& cam,
                                                const Box3D& box) {
  bool any = false;
  BBox2D raw{std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};
  for (const Vec3& c : box.corners()) {
    auto p = project_point(cam, c);
    if (!p) continue;
    any = true;
    raw.x_min = std::min(raw.x_min, p->pixel.x());
    raw.y_min = std::min(raw.y_min, p->pixel.y());
    raw.x_max = std::max(raw.x_max, p->pixel.x());
    raw.y_max = std::max(raw.y_max, p->pixel.y());
  }
  if (!any) return std::nullopt;
  const double w = cam.width, h = cam.height;
  BBox2D clipped{std::clamp(raw.x_min, 0.0, w), std::clamp(raw.y_min, 0.0, h),
                 std::clamp(raw.x_max, 0.0, w), std::clamp(raw.y_max, 0.0, h)};
  if (!(clipped.area() > 0.0)) return std::nullopt;
  const double raw_area = raw.area();
  const double trunc =
      raw_area > 0.0 && std::isfinite(raw_area) ? 1.0 - clipped.area() / raw_area : 0.0;
  return BoxProjection{raw, clipped, std::clamp(trunc, 0.0, 1.0)};
}

inline std::optional<BBox2D> box3d_to_bbox2d(const CameraModel& cam,
                                             const Box3D& box) {
  auto p = project_box(cam, box);
  if (!p) return std::nullopt;
  return p->clipped;
}

/// Vehicle-frame azimuth of the viewing ray through pixel (u, v).
inline double pixel_azimuth(const CameraModel& cam, double u, double v) {
  const Vec3 ray_cam((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
  const Vec3 ray = cam.pose.rotation * ray_cam;
  return normalize_angle(std::atan2(ray.y(), ray.x()));
}

/// Azimuths of the rays through the left and right bbox edges at the vertical
/// center. The result runs counterclockwise from min to max.
inline AngularExtent angular_extent(const CameraModel& cam, const BBox2D& bbox) {
  const double v = 0.5 * (bbox.y_min + bbox.y_max);
  const double left = pixel_azimuth(cam, bbox.x_min, v);
  const double right = pixel_azimuth(cam, bbox.x_max, v);
  // Pick the orientation whose counterclockwise span is the short one.
  if (ccw_distance(right, left) <= kPi) return {right, left};
  return {left, right};
}

}  // namespace crossview

#endif  // CROSSVIEW_SCENE_MODEL_HPP_
