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

// Seeded generator of multi-camera scenes: rig, objects, LiDAR returns,
// simulated 2D detections and identity-anchored embeddings.
//
// All randomness flows through Rng streams keyed by (seed, frame, purpose), so
// any frame can be regenerated independently and bit-identically.

#ifndef CROSSVIEW_SYNTHGEN_HPP_
#define CROSSVIEW_SYNTHGEN_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "crossview/metrics.hpp"
#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"

namespace crossview {

// ---------------------------------------------------------------------------
// Random numbers

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

/// mt19937_64 with portable conversions (the standard distributions are
/// implementation-defined, which would break cross-platform determinism).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class Stream : std::uint64_t { kScene = 1, kDetections = 2, kAnchor = 3 };

inline Rng make_stream(std::uint64_t seed, std::uint64_t frame, Stream s) {
  return Rng(hash_combine(hash_combine(seed, frame), static_cast<std::uint64_t>(s)));
}

// ---------------------------------------------------------------------------
// Specs

struct RigSpec {
  int n_cameras = 6;
  double hfov_deg = 70.0;
  double yaw_spacing_deg = 60.0;
  int width = 1600;
  int height = 900;

  double focal() const {
    return 0.5 * width / std::tan(0.5 * hfov_deg * kPi / 180.0);
  }

  bool operator==(const RigSpec&) const = default;
};

struct ClassMix {
  double car = 0.6;
  double pedestrian = 0.25;
  double cyclist = 0.15;

  bool operator==(const ClassMix&) const = default;
};

struct GenSpec {
  std::uint64_t seed = 42;
  int n_frames = 50;
  int min_objects = 6;
  int max_objects = 10;
  ClassMix class_mix;
  double min_radius = 8.0;
  double max_radius = 30.0;
  double overlap_fraction = 0.5;
  int embedding_dim = 32;
  double embedding_noise = 0.0;
  double miss_rate = 0.0;
  double bbox_jitter_px = 0.0;
  int min_lidar_points = 150;
  int max_lidar_points = 300;
  int clutter_points = 300;
  double sensor_height = 1.8;         // ground plane at z = -sensor_height
  double dim_jitter = 0.1;            // relative size variation around priors
  double min_center_spacing = 2.0;    // meters
  double min_angular_gap_deg = 1.0;   // between object azimuth extents

  std::optional<Error> check() const {
    auto bad = [](const char* m) { return make_error(ErrorCode::kInvalidArgument, m); };
    if (n_frames < 0) return bad("n_frames < 0");
    if (min_objects < 0 || max_objects < min_objects) return bad("bad object range");
    if (!(min_radius > 0.0 && max_radius >= min_radius)) return bad("bad radius range");
    for (double p : {overlap_fraction, miss_rate})
      if (!(p >= 0.0 && p <= 1.0)) return bad("probability not in [0,1]");
    if (!(embedding_noise >= 0.0)) return bad("embedding noise < 0");
    if (embedding_dim < 2) return bad("embedding_dim < 2");
    if (!(bbox_jitter_px >= 0.0)) return bad("jitter < 0");
    if (min_lidar_points < 0 || max_lidar_points < min_lidar_points)
      return bad("bad lidar point range");
    if (clutter_points < 0) return bad("clutter_points < 0");
    if (!(dim_jitter >= 0.0 && dim_jitter < 1.0)) return bad("dim_jitter not in [0,1)");
    if (class_mix.car < 0 || class_mix.pedestrian < 0 || class_mix.cyclist < 0 ||
        class_mix.car + class_mix.pedestrian + class_mix.cyclist <= 0)
      return bad("bad class mix");
    return std::nullopt;
  }

  bool operator==(const GenSpec&) const = default;
};

/// Class-typical (l, w, h) in meters. Generator conventions.
inline Vec3 class_dimensions(int class_id) {
  switch (class_id) {
    case kPedestrian: return {0.6, 0.6, 1.7};
    case kCyclist: return {1.8, 0.6, 1.7};
    case kCar:
    default: return {4.5, 1.9, 1.6};
  }
}

// ---------------------------------------------------------------------------
// Rig

/// Overlap wedge shared by two adjacent cameras, as an azimuth interval.
struct OverlapWedge {
  int camera_a = 0;
  int camera_b = 0;
  AngularExtent extent;
};

/// n cameras at a shared origin, yaw k * spacing. Consecutive cameras (and
/// the last/first pair, when the wrap-around gap is covered) are adjacent.
inline Result<CameraRig> make_rig(const RigSpec& spec) {
  if (spec.n_cameras < 1 || spec.width <= 0 || spec.height <= 0)
    return make_error(ErrorCode::kInvalidArgument, "bad rig size");
  if (!(spec.hfov_deg > 0.0 && spec.hfov_deg < 180.0))
    return make_error(ErrorCode::kInvalidArgument, "hfov must be in (0, 180)");
  if (!(spec.yaw_spacing_deg > 0.0))
    return make_error(ErrorCode::kInvalidArgument, "spacing must be > 0");
  if (spec.hfov_deg <= spec.yaw_spacing_deg)
    return make_error(ErrorCode::kNoOverlap, "hfov <= yaw spacing");

  CameraRig rig;
  const double f = spec.focal();
  for (int k = 0; k < spec.n_cameras; ++k) {
    const double yaw = normalize_angle(k * spec.yaw_spacing_deg * kPi / 180.0);
    rig.cameras.push_back(make_yaw_camera(k, yaw, f, f, 0.5 * spec.width,
                                          0.5 * spec.height, spec.width, spec.height));
  }
  for (int k = 0; k + 1 < spec.n_cameras; ++k) rig.adjacency.emplace_back(k, k + 1);
  const double wrap_gap = 360.0 - (spec.n_cameras - 1) * spec.yaw_spacing_deg;
  if (spec.n_cameras > 2 && wrap_gap > 0.0 && wrap_gap < spec.hfov_deg)
    rig.adjacency.emplace_back(spec.n_cameras - 1, 0);
  return rig;
}

inline double camera_yaw(const CameraModel& cam) {
  const Vec3 axis = cam.pose.rotation * Vec3::UnitZ();
  return std::atan2(axis.y(), axis.x());
}

/// Azimuth intervals seen by both cameras of each adjacent pair.
inline std::vector<OverlapWedge> overlap_wedges(const CameraRig& rig) {
  std::vector<OverlapWedge> out;
  for (const auto& [a, b] : rig.adjacency) {
    const CameraModel& ca = *rig.find(a);
    const CameraModel& cb = *rig.find(b);
    const double ya = camera_yaw(ca), yb = camera_yaw(cb);
    // Orient so that b lies counterclockwise of a.
    const bool ccw = ccw_distance(ya, yb) <= kPi;
    const CameraModel& lo = ccw ? ca : cb;
    const CameraModel& hi = ccw ? cb : ca;
    const double y_lo = ccw ? ya : yb, y_hi = ccw ? yb : ya;
    const double start = y_hi - 0.5 * hi.hfov();
    const double end = y_lo + 0.5 * lo.hfov();
    if (ccw_distance(start, end) >= kPi) continue;  // no overlap
    out.push_back({a, b, {normalize_angle(start), normalize_angle(end)}});
  }
  return out;
}

inline bool in_extent(const AngularExtent& e, double az) {
  return ccw_distance(e.min, az) <= e.width();
}

// ---------------------------------------------------------------------------
// Frames

struct GeneratedFrame {
  Frame frame;
  std::vector<std::int64_t> point_owner;  // uid per LiDAR point, -1 for clutter
};

/// Azimuth interval covered by a box footprint seen from the origin.
inline AngularExtent footprint_extent(const Box3D& box) {
  const double ref = std::atan2(box.y, box.x);
  double lo = kPi, hi = -kPi;
  const auto c = box.corners();
  for (int k = 0; k < 4; ++k) {
    const double rel = normalize_angle(std::atan2(c[k].y(), c[k].x()) - ref);
    lo = std::min(lo, rel);
    hi = std::max(hi, rel);
  }
  return {normalize_angle(ref + lo), normalize_angle(ref + hi)};
}

inline bool extents_intersect(const AngularExtent& a, const AngularExtent& b,
                              double margin) {
  const AngularExtent ea{a.min - margin, a.max + margin};
  return in_extent(ea, b.min) || in_extent(ea, b.max) || in_extent(b, ea.min);
}

/// True when the segment from the origin to `p` passes through `box`.
inline bool segment_hits_box(const Vec3& p, const Box3D& box) {
  const Vec3 o = box.to_local(Vec3::Zero());
  const Vec3 d = box.to_local(p) - o;
  const Vec3 half(0.5 * box.l, 0.5 * box.w, 0.5 * box.h);
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (std::abs(o[k]) > half[k]) return false;
      continue;
    }
    double ta = (-half[k] - o[k]) / d[k];
    double tb = (half[k] - o[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

namespace detail {

inline int sample_class(Rng& rng, const ClassMix& mix) {
  const double total = mix.car + mix.pedestrian + mix.cyclist;
  const double u = rng.uniform() * total;
  if (u < mix.car) return kCar;
  if (u < mix.car + mix.pedestrian) return kPedestrian;
  return kCyclist;
}

/// Samples points on the faces of `box` that face the sensor at the origin,
/// uniformly by area.
inline void sample_surface(Rng& rng, const Box3D& box, int count,
                           std::vector<Vec3>& out) {
  struct Face {
    int axis;
    double sign;
    double area;
  };
  const Vec3 half(0.5 * box.l, 0.5 * box.w, 0.5 * box.h);
  const Vec3 sensor = box.to_local(Vec3::Zero());
  std::vector<Face> faces;
  double total = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {-1.0, 1.0}) {
      if (sign * sensor[axis] <= half[axis]) continue;  // back-facing
      const double area = 4.0 * half[(axis + 1) % 3] * half[(axis + 2) % 3];
      faces.push_back({axis, sign, area});
      total += area;
    }
  }
  if (faces.empty()) return;
  const double c = std::cos(box.theta), s = std::sin(box.theta);
  for (int i = 0; i < count; ++i) {
    double pick = rng.uniform() * total;
    const Face* f = &faces.back();
    for (const Face& face : faces) {
      if (pick < face.area) {
        f = &face;
        break;
      }
      pick -= face.area;
    }
    Vec3 q;
    q[f->axis] = f->sign * half[f->axis];
    const int a1 = (f->axis + 1) % 3, a2 = (f->axis + 2) % 3;
    q[a1] = rng.uniform(-half[a1], half[a1]);
    q[a2] = rng.uniform(-half[a2], half[a2]);
    out.emplace_back(box.x + c * q.x() - s * q.y(), box.y + s * q.x() + c * q.y(),
                     box.z + q.z());
  }
}

}  // namespace detail

/// Objects and LiDAR returns for one frame; deterministic in
/// (spec.seed, frame_index).
inline GeneratedFrame generate_frame(const CameraRig& rig, const GenSpec& spec,
                                     int frame_index) {
  Rng rng = make_stream(spec.seed, static_cast<std::uint64_t>(frame_index), Stream::kScene);
  GeneratedFrame out;
  out.frame.index = frame_index;
  const double ground = -spec.sensor_height;
  const auto wedges = overlap_wedges(rig);
  const double margin = spec.min_angular_gap_deg * kPi / 180.0;

  const int n_objects = rng.uniform_int(spec.min_objects, spec.max_objects);
  std::vector<AngularExtent> taken;
  for (int k = 0; k < n_objects; ++k) {
    const int cls = detail::sample_class(rng, spec.class_mix);
    const Vec3 prior = class_dimensions(cls);
    Box3D box;
    box.l = prior.x() * (1.0 + rng.uniform(-spec.dim_jitter, spec.dim_jitter));
    box.w = prior.y() * (1.0 + rng.uniform(-spec.dim_jitter, spec.dim_jitter));
    box.h = prior.z() * (1.0 + rng.uniform(-spec.dim_jitter, spec.dim_jitter));
    const bool want_overlap = !wedges.empty() && rng.uniform() < spec.overlap_fraction;

    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      double az;
      if (want_overlap) {
        const auto& w = wedges[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(wedges.size()) - 1))];
        az = normalize_angle(w.extent.min + rng.uniform() * w.extent.width());
      } else {
        az = rng.uniform(-kPi, kPi);
        bool in_wedge = false;
        for (const auto& w : wedges) in_wedge = in_wedge || in_extent(w.extent, az);
        if (in_wedge) continue;
      }
      const double r = rng.uniform(spec.min_radius, spec.max_radius);
      box.x = r * std::cos(az);
      box.y = r * std::sin(az);
      box.z = ground + 0.5 * box.h;
      box.theta = normalize_angle(rng.uniform(-kPi, kPi));

      const AngularExtent ext = footprint_extent(box);
      bool ok = true;
      for (const auto& o : out.frame.objects)
        ok = ok && std::hypot(o.box.x - box.x, o.box.y - box.y) >= spec.min_center_spacing;
      for (const auto& t : taken) ok = ok && !extents_intersect(t, ext, margin);
      if (!ok) continue;
      taken.push_back(ext);
      out.frame.objects.push_back(
          {static_cast<std::int64_t>(frame_index + 1) * 1000 + k, cls, box});
      placed = true;
    }
  }

  for (const auto& o : out.frame.objects) {
    const int count = rng.uniform_int(spec.min_lidar_points, spec.max_lidar_points);
    detail::sample_surface(rng, o.box, count, out.frame.lidar.points);
    out.point_owner.resize(out.frame.lidar.points.size(), o.uid);
  }

  // Ground clutter, excluding returns hidden behind an object.
  const double r0 = 3.0, r1 = spec.max_radius + 10.0;
  for (int i = 0; i < spec.clutter_points; ++i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const double r = std::sqrt(rng.uniform(r0 * r0, r1 * r1));
      const double az = rng.uniform(-kPi, kPi);
      const Vec3 p(r * std::cos(az), r * std::sin(az), ground);
      bool hidden = false;
      for (const auto& o : out.frame.objects)
        hidden = hidden || segment_hits_box(p, o.box);
      if (hidden) continue;
      out.frame.lidar.points.push_back(p);
      out.point_owner.push_back(-1);
      break;
    }
  }
  return out;
}

/// Embedding for one detection of `uid`: a fixed per-identity anchor with
/// N(0,1) components, plus fresh N(0, sigma^2) noise drawn from `noise_rng`.
inline Embedding embedding_provider(std::int64_t uid, const GenSpec& spec, Rng& noise_rng) {
  Rng anchor_rng = make_stream(spec.seed, static_cast<std::uint64_t>(uid), Stream::kAnchor);
  Embedding e(spec.embedding_dim);
  for (int i = 0; i < spec.embedding_dim; ++i) e[i] = anchor_rng.normal();
  if (spec.embedding_noise > 0.0)
    for (int i = 0; i < spec.embedding_dim; ++i) e[i] += spec.embedding_noise * noise_rng.normal();
  return e;
}

/// One detection per (camera, visible object): projected box clipped to the
/// image, jittered, dropped with the miss rate. Objects seen by two cameras
/// therefore produce two (truncated) detections.
inline std::vector<Detection2D> simulate_detections(const CameraRig& rig,
                                                    const std::vector<SceneObject>& objects,
                                                    const GenSpec& spec, int frame_index) {
  Rng rng = make_stream(spec.seed, static_cast<std::uint64_t>(frame_index), Stream::kDetections);
  std::vector<Detection2D> out;
  for (const auto& cam : rig.cameras) {
    for (const auto& o : objects) {
      const auto proj = project_box(cam, o.box);
      if (!proj) continue;
      if (rng.uniform() < spec.miss_rate) continue;
      BBox2D b = proj->clipped;
      if (spec.bbox_jitter_px > 0.0) {
        const double j = spec.bbox_jitter_px;
        b.x_min += rng.uniform(-j, j);
        b.y_min += rng.uniform(-j, j);
        b.x_max += rng.uniform(-j, j);
        b.y_max += rng.uniform(-j, j);
        if (b.x_min > b.x_max) std::swap(b.x_min, b.x_max);
        if (b.y_min > b.y_max) std::swap(b.y_min, b.y_max);
        b.x_min = std::clamp(b.x_min, 0.0, static_cast<double>(cam.width));
        b.x_max = std::clamp(b.x_max, 0.0, static_cast<double>(cam.width));
        b.y_min = std::clamp(b.y_min, 0.0, static_cast<double>(cam.height));
        b.y_max = std::clamp(b.y_max, 0.0, static_cast<double>(cam.height));
      }
      Detection2D d;
      d.camera_id = cam.id;
      d.bbox = b;
      d.class_id = o.class_id;
      d.score = rng.uniform(0.5, 1.0);
      d.embedding = embedding_provider(o.uid, spec, rng);
      d.truth_uid = o.uid;
      if (!(b.area() > 0.0)) continue;
      out.push_back(std::move(d));
    }
  }
  return out;
}

/// 2D ground truth from box projections, with truncation from clipping.
inline std::vector<GroundTruth2D> ground_truth_2d(const CameraRig& rig, const Frame& frame) {
  std::vector<GroundTruth2D> out;
  for (const auto& cam : rig.cameras)
    for (const auto& o : frame.objects)
      if (auto p = project_box(cam, o.box))
        out.push_back({frame.index, cam.id, o.class_id, p->clipped, p->truncation, o.uid});
  return out;
}

}  // namespace crossview

#endif  // CROSSVIEW_SYNTHGEN_HPP_
