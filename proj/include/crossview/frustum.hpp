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

// Frustum point selection and the two-camera frustum merge.

#ifndef CROSSVIEW_FRUSTUM_HPP_
#define CROSSVIEW_FRUSTUM_HPP_

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <vector>

#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"

namespace crossview {

struct Frustum {
  PointCloud points;
  std::vector<std::size_t> source_detections;  // 1 or 2 entries
  AngularExtent extent;
  double central_axis = 0.0;
};

/// Lexicographic (x, y, z) order; two points compare equivalent only when
/// all coordinates are bitwise-equal values.
struct PointLess {
  bool operator()(const Vec3& a, const Vec3& b) const {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  }
};

inline std::vector<Vec3> sorted_unique(std::vector<Vec3> pts) {
  std::sort(pts.begin(), pts.end(), PointLess{});
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

inline bool inside_frustum(const CameraModel& cam, const BBox2D& bbox,
                           const Vec3& p) {
  auto proj = project_point(cam, p);
  return proj.ok() && bbox.contains(proj->pixel.x(), proj->pixel.y());
}

/// Keeps the points in front of `cam` whose projection falls inside `bbox`
/// (edges inclusive). EmptyFrustum when nothing survives.
inline Result<Frustum> filter_frustum(const CameraModel& cam,
                                      const BBox2D& bbox,
                                      const PointCloud& cloud,
                                      std::size_t detection = 0) {
  Frustum f;
  for (const Vec3& p : cloud.points)
    if (inside_frustum(cam, bbox, p)) f.points.points.push_back(p);
  if (f.points.empty())
    return make_error(ErrorCode::kEmptyFrustum, "no point projects into the box");
  f.source_detections = {detection};
  f.extent = angular_extent(cam, bbox);
  f.central_axis = circular_mean(f.extent.min, f.extent.max);
  return f;
}

/// Hull of two angular extents on the circle. DegenerateExtent when the
/// combined interval spans half a turn or more.
inline Result<AngularExtent> combine_extents(const AngularExtent& a,
                                             const AngularExtent& b) {
  // Unwrap both intervals around a reference that is symmetric in (a, b).
  const double ref = circular_mean(a.midpoint(), b.midpoint());
  const double lo_a = normalize_angle(a.min - ref);
  const double lo_b = normalize_angle(b.min - ref);
  const double hi_a = lo_a + a.width();
  const double hi_b = lo_b + b.width();
  const double lo = std::min(lo_a, lo_b);
  const double hi = std::max(hi_a, hi_b);
  if (!(hi - lo < kPi))
    return make_error(ErrorCode::kDegenerateExtent,
                      "combined extent spans >= pi");
  AngularExtent out;
  out.min = lo_a <= lo_b ? a.min : b.min;
  out.max = hi_a >= hi_b ? a.max : b.max;
  return out;
}

/// Circular mean of the two outermost angles of the combined extent.
inline Result<double> central_axis_of_pair(const AngularExtent& a,
                                           const AngularExtent& b) {
  auto hull = combine_extents(a, b);
  if (!hull) return hull.error();
  return circular_mean(hull->min, hull->max);
}

/// Number of points present in both frustums (exact coordinate identity).
inline std::size_t shared_point_count(const Frustum& a, const Frustum& b) {
  const std::vector<Vec3> pa = sorted_unique(a.points.points);
  const std::vector<Vec3> pb = sorted_unique(b.points.points);
  std::vector<Vec3> common;
  std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(),
                        std::back_inserter(common), PointLess{});
  return common.size();
}

/// Union of two frustums from adjacent cameras. MergeRejected when they share
/// no point: the pairing is treated as a false re-identification.
inline Result<Frustum> merge_frustums(const Frustum& a, const Frustum& b) {
  const std::vector<Vec3> pa = sorted_unique(a.points.points);
  const std::vector<Vec3> pb = sorted_unique(b.points.points);

  const bool shared = [&] {
    auto i = pa.begin();
    auto j = pb.begin();
    PointLess less;
    while (i != pa.end() && j != pb.end()) {
      if (less(*i, *j)) ++i;
      else if (less(*j, *i)) ++j;
      else return true;
    }
    return false;
  }();
  if (!shared)
    return make_error(ErrorCode::kMergeRejected, "frustums share no point");

  auto hull = combine_extents(a.extent, b.extent);
  if (!hull) return hull.error();

  Frustum out;
  out.points.points.reserve(pa.size() + pb.size());
  std::set_union(pa.begin(), pa.end(), pb.begin(), pb.end(),
                 std::back_inserter(out.points.points), PointLess{});
  out.source_detections = a.source_detections;
  out.source_detections.insert(out.source_detections.end(),
                               b.source_detections.begin(),
                               b.source_detections.end());
  std::sort(out.source_detections.begin(), out.source_detections.end());
  out.extent = *hull;
  out.central_axis = circular_mean(hull->min, hull->max);
  return out;
}

}  // namespace crossview

#endif  // CROSSVIEW_FRUSTUM_HPP_
