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

// Geometric 3D box fit over the points of a frustum.
//
// Yaw comes from the principal axis of the ground-plane scatter (or the
// frustum axis), folded into (axis - pi/2, axis + pi/2]. Extents are measured
// along the yaw frame; each dimension is max(extent, prior) capped at twice
// the prior. Where a dimension is clearly only partly observed, the box is
// anchored on the observed face nearest the sensor and grows away from it.

#ifndef CROSSVIEW_ESTIMATOR3D_HPP_
#define CROSSVIEW_ESTIMATOR3D_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "crossview/frustum.hpp"
#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"

namespace crossview {

enum class YawMode { kPca, kFrustumAxis };

struct EstimatorConfig {
  std::map<int, Vec3> priors = {{kCar, {4.5, 1.9, 1.6}},
                                {kPedestrian, {0.6, 0.6, 1.7}},
                                {kCyclist, {1.8, 0.6, 1.7}}};
  YawMode yaw_mode = YawMode::kPca;
  std::size_t min_points = 5;
  double trim_fraction = 0.02;  // per side, for robust extents
  double full_extent_fraction = 0.8;  // observed/prior ratio treated as complete
  Vec3 sensor_origin = Vec3::Zero();

  std::optional<Error> check() const {
    if (min_points < 1) return make_error(ErrorCode::kInvalidArgument, "min_points < 1");
    if (!(trim_fraction >= 0.0 && trim_fraction < 0.5))
      return make_error(ErrorCode::kInvalidArgument, "trim_fraction not in [0, 0.5)");
    if (!(full_extent_fraction > 0.0 && full_extent_fraction <= 1.0))
      return make_error(ErrorCode::kInvalidArgument, "full_extent_fraction not in (0, 1]");
    for (const auto& [c, p] : priors)
      if (!(p.minCoeff() > 0.0))
        return make_error(ErrorCode::kInvalidArgument, "priors must be positive");
    return std::nullopt;
  }

  Vec3 prior(int class_id) const {
    auto it = priors.find(class_id);
    return it != priors.end() ? it->second : Vec3(1.0, 1.0, 1.0);
  }

  bool operator==(const EstimatorConfig&) const = default;
};

namespace detail {

/// Trimmed [lo, hi] of `values`.
inline std::pair<double, double> trimmed_range(std::vector<double> values, double trim) {
  std::sort(values.begin(), values.end());
  const auto k = static_cast<std::size_t>(std::floor(trim * static_cast<double>(values.size())));
  return {values[k], values[values.size() - 1 - k]};
}

/// Center along one axis of a box of size `dim` covering [lo, hi]. Ranges of
/// at least `full * dim` count as fully observed and stay centered.
inline double anchored_center(double lo, double hi, double dim, double sensor, double full) {
  if (hi - lo >= full * dim) return 0.5 * (lo + hi);
  return std::abs(sensor - lo) <= std::abs(sensor - hi) ? lo + 0.5 * dim : hi - 0.5 * dim;
}

}  // namespace detail

/// Yaw of the principal ground-plane axis of `points`, folded toward `axis`.
inline double principal_yaw(const std::vector<Vec3>& points, double axis) {
  Vec2 mean = Vec2::Zero();
  for (const Vec3& p : points) mean += p.head<2>();
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec3& p : points) {
    const Vec2 d = p.head<2>() - mean;
    cov += d * d.transpose();
  }
  if (!(cov.trace() > 0.0)) return axis;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Vec2 major = eig.eigenvectors().col(1);  // ascending eigenvalues
  return std::atan2(major.y(), major.x());
}

inline double fold_toward(double yaw, double axis) {
  const double rel = normalize_angle(yaw - axis);
  if (rel > 0.5 * kPi || rel <= -0.5 * kPi) return normalize_angle(yaw + kPi);
  return normalize_angle(yaw);
}

inline Result<Box3D> estimate_box(const Frustum& frustum, int class_id,
                                  const EstimatorConfig& cfg) {
  if (auto e = cfg.check()) return *e;
  const std::size_t n = frustum.points.size();
  if (n < cfg.min_points)
    return make_error(ErrorCode::kTooFewPoints, std::to_string(n) + " points");

  // Canonical order makes the fit independent of input ordering.
  const std::vector<Vec3> pts = [&] {
    std::vector<Vec3> v = frustum.points.points;
    std::sort(v.begin(), v.end(), PointLess{});
    return v;
  }();

  const double axis = frustum.central_axis;
  const double raw_yaw = cfg.yaw_mode == YawMode::kPca ? principal_yaw(pts, axis) : axis;
  const double yaw = fold_toward(raw_yaw, axis);
  const double c = std::cos(yaw), s = std::sin(yaw);

  std::vector<double> along(n), across(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    along[i] = c * pts[i].x() + s * pts[i].y();
    across[i] = -s * pts[i].x() + c * pts[i].y();
    up[i] = pts[i].z();
  }
  const auto [u_lo, u_hi] = detail::trimmed_range(along, cfg.trim_fraction);
  const auto [v_lo, v_hi] = detail::trimmed_range(across, cfg.trim_fraction);
  const auto [z_lo, z_hi] = detail::trimmed_range(up, cfg.trim_fraction);

  const Vec3 prior = cfg.prior(class_id);
  auto fit_dim = [](double extent, double p) { return std::min(std::max(extent, p), 2.0 * p); };
  Box3D box;
  box.l = fit_dim(u_hi - u_lo, prior.x());
  box.w = fit_dim(v_hi - v_lo, prior.y());
  box.h = fit_dim(z_hi - z_lo, prior.z());

  const Vec3& o = cfg.sensor_origin;
  const double su = c * o.x() + s * o.y();
  const double sv = -s * o.x() + c * o.y();
  const double full = cfg.full_extent_fraction;
  const double cu = detail::anchored_center(u_lo, u_hi, box.l, su, full);
  const double cv = detail::anchored_center(v_lo, v_hi, box.w, sv, full);
  box.z = detail::anchored_center(z_lo, z_hi, box.h, o.z(), full);
  box.x = c * cu - s * cv;
  box.y = s * cu + c * cv;
  box.theta = yaw;
  return box;
}

}  // namespace crossview

#endif  // CROSSVIEW_ESTIMATOR3D_HPP_
