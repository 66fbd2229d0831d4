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

// Detection metrics.
//
// 2D: KITTI-style AP. Greedy score-descending matching at an IoU threshold,
//     ground truth outside the difficulty bounds ignored, precision sampled at
//     40 recall points (R40).
// 3D: nuScenes-style AP on ground-plane center distance, averaged over the
//     distance thresholds, plus the true-positive errors ATE / ASE / AOE.

#ifndef CROSSVIEW_METRICS_HPP_
#define CROSSVIEW_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"

namespace crossview {

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};

namespace detail {

/// Detection indices sorted by descending score; ties keep input order.
template <typename Det>
std::vector<std::size_t> score_order(std::span<const Det> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

/// Best precision among points with recall >= r; 0 if none.
inline double interpolated_precision(std::span<const PrPoint> curve, double r) {
  double best = 0.0;
  for (const PrPoint& p : curve)
    if (p.recall >= r) best = std::max(best, p.precision);
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 2D

struct EvalConfig2D {
  double iou_threshold = 0.5;
  double min_height_px = 25.0;
  double max_truncation = 0.30;
  std::string difficulty = "moderate";
  std::vector<int> classes = {kCar, kPedestrian, kCyclist};

  std::optional<Error> check() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
      return make_error(ErrorCode::kInvalidArgument, "iou_threshold not in (0,1]");
    if (!(min_height_px >= 0.0))
      return make_error(ErrorCode::kInvalidArgument, "min_height_px < 0");
    if (!(max_truncation >= 0.0 && max_truncation <= 1.0))
      return make_error(ErrorCode::kInvalidArgument, "max_truncation not in [0,1]");
    return std::nullopt;
  }

  bool operator==(const EvalConfig2D&) const = default;
};

struct Detection2DRecord {
  int frame = 0;
  int camera_id = 0;
  int class_id = kCar;
  double score = 0.0;
  BBox2D bbox;
};

struct GroundTruth2D {
  int frame = 0;
  int camera_id = 0;
  int class_id = kCar;
  BBox2D bbox;
  double truncation = 0.0;
  std::int64_t uid = 0;

  bool ignored(const EvalConfig2D& cfg) const {
    return bbox.height() < cfg.min_height_px || truncation > cfg.max_truncation;
  }
};

/// PR points for one class, one point per counted detection in score order.
/// A detection whose only qualifying overlap is with ignored ground truth is
/// not counted.
inline std::vector<PrPoint> pr_curve_2d(std::span<const Detection2DRecord> dets,
                                        std::span<const GroundTruth2D> gts,
                                        int class_id, const EvalConfig2D& cfg,
                                        std::size_t* num_gt = nullptr) {
  std::size_t n_gt = 0;
  for (const auto& g : gts)
    if (g.class_id == class_id && !g.ignored(cfg)) ++n_gt;
  if (num_gt) *num_gt = n_gt;

  std::vector<char> taken(gts.size(), 0);
  std::vector<PrPoint> curve;
  std::size_t tp = 0, fp = 0;
  for (std::size_t di : detail::score_order(dets)) {
    const Detection2DRecord& d = dets[di];
    if (d.class_id != class_id) continue;
    double best_iou = -1.0;
    std::size_t best = gts.size();
    bool hits_ignored = false;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      const GroundTruth2D& g = gts[gi];
      if (g.class_id != class_id || g.frame != d.frame || g.camera_id != d.camera_id)
        continue;
      const double iou = iou2d(d.bbox, g.bbox);
      if (iou < cfg.iou_threshold) continue;
      if (g.ignored(cfg)) {
        hits_ignored = true;
      } else if (!taken[gi] && iou > best_iou) {
        best_iou = iou;
        best = gi;
      }
    }
    if (best < gts.size()) {
      taken[best] = 1;
      ++tp;
    } else if (hits_ignored) {
      continue;
    } else {
      ++fp;
    }
    curve.push_back({static_cast<double>(tp) / static_cast<double>(tp + fp),
                     n_gt > 0 ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0});
  }
  return curve;
}

/// Mean interpolated precision at recall k/40, k = 1..40.
inline double ap_r40(std::span<const PrPoint> curve) {
  double sum = 0.0;
  for (int k = 1; k <= 40; ++k)
    sum += detail::interpolated_precision(curve, static_cast<double>(k) / 40.0);
  return sum / 40.0;
}

/// AP per class in cfg.classes that has at least one counted ground truth.
inline std::map<int, double> ap_2d(std::span<const Detection2DRecord> dets,
                                   std::span<const GroundTruth2D> gts,
                                   const EvalConfig2D& cfg) {
  std::map<int, double> out;
  for (int c : cfg.classes) {
    std::size_t n_gt = 0;
    const auto curve = pr_curve_2d(dets, gts, c, cfg, &n_gt);
    if (n_gt > 0) out[c] = ap_r40(curve);
  }
  return out;
}

// ---------------------------------------------------------------------------
// 3D

enum class Region { kAll, kOverlap };

inline std::string_view region_name(Region r) {
  return r == Region::kAll ? "all" : "overlap";
}

struct EvalConfig3D {
  std::vector<double> center_distance_thresholds = {0.5, 1.0, 2.0, 4.0};
  std::vector<int> classes = {kCar, kPedestrian, kCyclist};
  Region region = Region::kAll;
  double tp_threshold = 2.0;  // matching distance for ATE/ASE/AOE
  double min_recall = 0.1;
  double min_precision = 0.1;

  std::optional<Error> check() const {
    if (center_distance_thresholds.empty())
      return make_error(ErrorCode::kInvalidArgument, "no distance thresholds");
    for (std::size_t i = 0; i < center_distance_thresholds.size(); ++i) {
      if (!(center_distance_thresholds[i] > 0.0))
        return make_error(ErrorCode::kInvalidArgument, "threshold must be > 0");
      if (i > 0 && !(center_distance_thresholds[i] > center_distance_thresholds[i - 1]))
        return make_error(ErrorCode::kInvalidArgument, "thresholds must ascend");
    }
    if (!(min_precision >= 0.0 && min_precision < 1.0))
      return make_error(ErrorCode::kInvalidArgument, "min_precision not in [0,1)");
    if (!(min_recall >= 0.0 && min_recall < 1.0))
      return make_error(ErrorCode::kInvalidArgument, "min_recall not in [0,1)");
    return std::nullopt;
  }

  bool operator==(const EvalConfig3D&) const = default;
};

struct ScoredBox3D {
  int frame = 0;
  int class_id = kCar;
  double score = 0.0;
  Box3D box;
};

struct GtBox3D {
  int frame = 0;
  int class_id = kCar;
  Box3D box;
  std::int64_t uid = 0;
};

struct Match3D {
  std::size_t det = 0;
  std::size_t gt = 0;
  double distance = 0.0;
};

inline double center_distance_2d(const Box3D& a, const Box3D& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Greedy by descending score: each detection takes the nearest unmatched
/// ground truth of its class and frame within `threshold` (ground-plane).
inline std::vector<Match3D> match_3d(std::span<const ScoredBox3D> dets,
                                     std::span<const GtBox3D> gt, double threshold) {
  std::vector<char> taken(gt.size(), 0);
  std::vector<Match3D> out;
  for (std::size_t di : detail::score_order(dets)) {
    const ScoredBox3D& d = dets[di];
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t best = gt.size();
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
      if (taken[gi] || gt[gi].class_id != d.class_id || gt[gi].frame != d.frame) continue;
      const double dist = center_distance_2d(d.box, gt[gi].box);
      if (dist <= threshold && dist < best_dist) {
        best_dist = dist;
        best = gi;
      }
    }
    if (best < gt.size()) {
      taken[best] = 1;
      out.push_back({di, best, best_dist});
    }
  }
  return out;
}

/// IoU of two boxes after moving them onto a common center and yaw.
inline double aligned_iou3d(const Box3D& a, const Box3D& b) {
  const double inter = std::min(a.l, b.l) * std::min(a.w, b.w) * std::min(a.h, b.h);
  const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Smallest absolute yaw difference, in [0, pi].
inline double yaw_difference(double a, double b) {
  return std::abs(normalize_angle(a - b));
}

struct TpErrors {
  double ate = 0.0;  // meters
  double ase = 0.0;  // 1 - aligned IoU
  double aoe = 0.0;  // radians
  std::size_t count = 0;

  double ase_percent() const { return 100.0 * ase; }

  bool operator==(const TpErrors&) const = default;
};

/// Mean errors over (prediction, ground truth) pairs. NoMatches when empty.
inline Result<TpErrors> tp_errors(std::span<const std::pair<Box3D, Box3D>> pairs) {
  if (pairs.empty()) return make_error(ErrorCode::kNoMatches, "no matched pairs");
  TpErrors e;
  for (const auto& [pred, gt] : pairs) {
    e.ate += center_distance_2d(pred, gt);
    e.ase += 1.0 - aligned_iou3d(pred, gt);
    e.aoe += yaw_difference(pred.theta, gt.theta);
  }
  const double n = static_cast<double>(pairs.size());
  e.ate /= n;
  e.ase /= n;
  e.aoe /= n;
  e.count = pairs.size();
  return e;
}

/// PR points for one class at one distance threshold.
inline std::vector<PrPoint> pr_curve_3d(std::span<const ScoredBox3D> dets,
                                        std::span<const GtBox3D> gt, int class_id,
                                        double threshold) {
  std::vector<ScoredBox3D> cd;
  std::vector<GtBox3D> cg;
  for (const auto& d : dets)
    if (d.class_id == class_id) cd.push_back(d);
  for (const auto& g : gt)
    if (g.class_id == class_id) cg.push_back(g);
  std::vector<char> is_tp(cd.size(), 0);
  for (const Match3D& m : match_3d(cd, cg, threshold)) is_tp[m.det] = 1;
  std::vector<PrPoint> curve;
  std::size_t tp = 0, fp = 0;
  for (std::size_t di : detail::score_order<ScoredBox3D>(cd)) {
    if (is_tp[di]) ++tp;
    else ++fp;
    curve.push_back({static_cast<double>(tp) / static_cast<double>(tp + fp),
                     cg.empty() ? 0.0
                                : static_cast<double>(tp) / static_cast<double>(cg.size())});
  }
  return curve;
}

/// Normalized area under the interpolated PR curve sampled at 101 recall
/// points, discarding recall <= min_recall and precision below min_precision.
inline double nuscenes_ap(std::span<const PrPoint> curve, double min_recall = 0.1,
                          double min_precision = 0.1) {
  const int first = static_cast<int>(std::lround(100.0 * min_recall)) + 1;
  if (first > 100) return 0.0;
  double sum = 0.0;
  for (int k = first; k <= 100; ++k) {
    const double p = detail::interpolated_precision(curve, static_cast<double>(k) / 100.0);
    sum += std::max(p - min_precision, 0.0);
  }
  const double ap = sum / static_cast<double>(100 - first + 1) / (1.0 - min_precision);
  return std::clamp(ap, 0.0, 1.0);
}

struct ClassMetrics3D {
  double ap = 0.0;
  std::vector<double> ap_per_threshold;
  std::optional<TpErrors> errors;
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;

  bool operator==(const ClassMetrics3D&) const = default;
};

/// Per-class AP averaged over distance thresholds, plus TP errors at
/// cfg.tp_threshold. Classes without ground truth are omitted.
inline std::map<int, ClassMetrics3D> ap_3d(std::span<const ScoredBox3D> dets,
                                           std::span<const GtBox3D> gt,
                                           const EvalConfig3D& cfg) {
  std::map<int, ClassMetrics3D> out;
  for (int c : cfg.classes) {
    ClassMetrics3D m;
    for (const auto& g : gt) m.num_gt += g.class_id == c;
    for (const auto& d : dets) m.num_pred += d.class_id == c;
    if (m.num_gt == 0) continue;
    for (double thr : cfg.center_distance_thresholds) {
      const auto curve = pr_curve_3d(dets, gt, c, thr);
      m.ap_per_threshold.push_back(nuscenes_ap(curve, cfg.min_recall, cfg.min_precision));
    }
    m.ap = std::accumulate(m.ap_per_threshold.begin(), m.ap_per_threshold.end(), 0.0) /
           static_cast<double>(m.ap_per_threshold.size());

    std::vector<ScoredBox3D> cd;
    std::vector<GtBox3D> cg;
    for (const auto& d : dets)
      if (d.class_id == c) cd.push_back(d);
    for (const auto& g : gt)
      if (g.class_id == c) cg.push_back(g);
    std::vector<std::pair<Box3D, Box3D>> pairs;
    for (const Match3D& mt : match_3d(cd, cg, cfg.tp_threshold))
      pairs.emplace_back(cd[mt.det].box, cg[mt.gt].box);
    if (auto e = tp_errors(pairs)) m.errors = *e;
    out[c] = std::move(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regions

inline std::size_t visible_camera_count(const CameraRig& rig, const Box3D& box) {
  std::size_t n = 0;
  for (const auto& cam : rig.cameras) n += box3d_to_bbox2d(cam, box).has_value();
  return n;
}

/// Indices of the boxes whose projection is nonempty in two or more cameras.
inline std::vector<std::size_t> overlap_region_filter(const CameraRig& rig,
                                                      std::span<const Box3D> boxes) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < boxes.size(); ++i)
    if (visible_camera_count(rig, boxes[i]) >= 2) out.push_back(i);
  return out;
}

inline std::vector<SceneObject> overlap_region_filter(const CameraRig& rig,
                                                      std::span<const SceneObject> objects) {
  std::vector<SceneObject> out;
  for (const auto& o : objects)
    if (visible_camera_count(rig, o.box) >= 2) out.push_back(o);
  return out;
}

}  // namespace crossview

#endif  // CROSSVIEW_METRICS_HPP_
