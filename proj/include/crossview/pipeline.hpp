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

// End-to-end detection pipeline and its four variants:
//
//   Original           every 2D detection becomes its own frustum and box
//   TwoDPlusEmbedding  same boxes; embeddings computed and matched for re-ID
//                      scoring only
//   OriginalNMS        greedy per-image NMS before the frustum stage
//   SiaNMS             cross-camera matching; each matched pair yields one box
//                      from the merged frustum (or the better-scored frustum
//                      when the merge is rejected)

#ifndef CROSSVIEW_PIPELINE_HPP_
#define CROSSVIEW_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <chrono>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crossview/estimator3d.hpp"
#include "crossview/frustum.hpp"
#include "crossview/losses.hpp"
#include "crossview/matching.hpp"
#include "crossview/metrics.hpp"
#include "crossview/reid_eval.hpp"
#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"
#include "crossview/synthgen.hpp"

namespace crossview {

enum class PipelineVariant { kOriginal, kTwoDPlusEmbedding, kOriginalNMS, kSiaNMS };

inline constexpr std::array<PipelineVariant, 4> kAllVariants = {
    PipelineVariant::kOriginal, PipelineVariant::kTwoDPlusEmbedding,
    PipelineVariant::kOriginalNMS, PipelineVariant::kSiaNMS};

inline std::string_view variant_name(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::kOriginal: return "original";
    case PipelineVariant::kTwoDPlusEmbedding: return "2d+embedding";
    case PipelineVariant::kOriginalNMS: return "original+nms";
    case PipelineVariant::kSiaNMS: return "sianms";
  }
  return "unknown";
}

inline std::optional<PipelineVariant> parse_variant(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (s == "original") return PipelineVariant::kOriginal;
  if (s == "2d+embedding" || s == "twodplusembedding") return PipelineVariant::kTwoDPlusEmbedding;
  if (s == "original+nms" || s == "originalnms") return PipelineVariant::kOriginalNMS;
  if (s == "sianms") return PipelineVariant::kSiaNMS;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Greedy NMS

/// Greedy per-image NMS: by descending score, a box survives iff its IoU with
/// every survivor of the same camera and class is below `iou_thr`. Returns
/// surviving indices in ascending order.
inline std::vector<std::size_t> nms_greedy(std::span<const Detection2D> dets, double iou_thr) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool keep = true;
    for (std::size_t k : kept) {
      if (dets[k].camera_id != dets[i].camera_id || dets[k].class_id != dets[i].class_id)
        continue;
      if (iou2d(dets[k].bbox, dets[i].bbox) >= iou_thr) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

// ---------------------------------------------------------------------------
// Configuration and results

struct PipelineConfig {
  LossConfig loss;
  EstimatorConfig estimator;
  GenSpec gen;
  RigSpec rig;
  EvalConfig2D eval2d;
  EvalConfig3D eval3d;
  std::optional<double> tau;  // defaults to the loss margin midpoint
  double nms_iou = 0.5;

  double effective_tau() const { return tau ? *tau : loss.default_tau(); }

  std::optional<Error> check() const {
    for (auto e : {loss.check(), estimator.check(), gen.check(), eval2d.check(),
                   eval3d.check()})
      if (e) return e;
    if (!(effective_tau() > 0.0)) return make_error(ErrorCode::kInvalidArgument, "tau <= 0");
    if (!(nms_iou > 0.0 && nms_iou < 1.0))
      return make_error(ErrorCode::kInvalidArgument, "nms_iou not in (0,1)");
    return std::nullopt;
  }

  bool operator==(const PipelineConfig&) const = default;
};

struct OutputBox {
  int frame = 0;
  int class_id = kCar;
  double score = 0.0;
  Box3D box;
  std::vector<std::size_t> sources;  // detection indices within the frame
  bool merged = false;
};

struct FrameResult {
  int frame = 0;
  std::vector<Detection2D> detections;  // after variant preprocessing
  std::vector<OutputBox> boxes;
  std::optional<MatchResult> matches;
  std::optional<ReidStats> reid;
  std::size_t merges = 0;
  std::size_t merge_rejected = 0;
  std::size_t dropped = 0;  // detections without enough LiDAR support
};

struct RunCounters {
  std::size_t frames = 0;
  std::size_t frames_failed = 0;
  std::size_t detections = 0;
  std::size_t boxes = 0;
  std::size_t merges = 0;
  std::size_t merge_rejected = 0;
  std::size_t dropped = 0;

  bool operator==(const RunCounters&) const = default;
};

struct RegionReport {
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
  std::map<int, ClassMetrics3D> classes;

  bool operator==(const RegionReport&) const = default;
};

struct RunReport {
  PipelineVariant variant = PipelineVariant::kOriginal;
  std::map<int, double> ap2d;
  std::optional<ReidStats> reid;
  std::map<Region, RegionReport> regions;
  RunCounters counters;
  std::vector<std::string> frame_errors;
  std::optional<double> runtime_s;
  PipelineConfig config;

  bool operator==(const RunReport&) const = default;
};

struct RunOutput {
  RunReport report;
  std::vector<FrameResult> frames;
};

// ---------------------------------------------------------------------------
// Per-frame processing

namespace detail {

inline std::optional<Frustum> frustum_for(const CameraRig& rig, const Detection2D& det,
                                          const PointCloud& cloud, std::size_t index) {
  const CameraModel* cam = rig.find(det.camera_id);
  if (!cam) return std::nullopt;
  auto f = filter_frustum(*cam, det.bbox, cloud, index);
  if (!f) return std::nullopt;
  return std::move(f).value();
}

inline bool emit_box(const Frustum& f, const Detection2D& det, double score, int frame,
                     const EstimatorConfig& cfg, bool merged, FrameResult& out) {
  auto box = estimate_box(f, det.class_id, cfg);
  if (!box) return false;
  out.boxes.push_back({frame, det.class_id, score, *box, f.source_detections, merged});
  return true;
}

}  // namespace detail

/// Runs one variant over one frame. `detections` are the raw 2D detections;
/// embeddings are stripped for variants that do not use them.
inline Result<FrameResult> process_frame(const CameraRig& rig, const Frame& frame,
                                         std::vector<Detection2D> detections,
                                         PipelineVariant variant,
                                         const PipelineConfig& cfg) {
  FrameResult out;
  out.frame = frame.index;
  for (const auto& d : detections)
    if (!rig.find(d.camera_id))
      return make_error(ErrorCode::kInvalidArgument, "detection references unknown camera");

  const bool uses_embeddings = variant == PipelineVariant::kTwoDPlusEmbedding ||
                               variant == PipelineVariant::kSiaNMS;
  if (!uses_embeddings)
    for (auto& d : detections) d.embedding.reset();
  if (variant == PipelineVariant::kOriginalNMS) {
    std::vector<Detection2D> kept;
    for (std::size_t i : nms_greedy(detections, cfg.nms_iou)) kept.push_back(detections[i]);
    detections = std::move(kept);
  }
  out.detections = detections;

  if (uses_embeddings) {
    auto m = match_adjacent(rig, detections, cfg.effective_tau());
    if (!m) return m.error();
    out.matches = std::move(m).value();
    const bool has_truth = std::all_of(detections.begin(), detections.end(),
                                       [](const Detection2D& d) { return d.truth_uid.has_value(); });
    if (has_truth) {
      auto s = evaluate_frame(*out.matches, detections, rig);
      if (s) out.reid = *s;
    }
  }

  std::vector<std::optional<Frustum>> frustums(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i)
    frustums[i] = detail::frustum_for(rig, detections[i], frame.lidar, i);

  auto single = [&](std::size_t i) {
    if (!frustums[i] || !detail::emit_box(*frustums[i], detections[i], detections[i].score,
                                          frame.index, cfg.estimator, false, out))
      ++out.dropped;
  };

  if (variant != PipelineVariant::kSiaNMS) {
    for (std::size_t i = 0; i < detections.size(); ++i) single(i);
    return out;
  }

  for (const MatchedPair& p : out.matches->pairs) {
    const Detection2D& da = detections[p.a];
    const Detection2D& db = detections[p.b];
    const double score = std::max(da.score, db.score);
    const std::size_t best = da.score >= db.score ? p.a : p.b;
    const std::size_t other = best == p.a ? p.b : p.a;
    const Detection2D& lead = detections[best];

    if (frustums[p.a] && frustums[p.b]) {
      auto merged = merge_frustums(*frustums[p.a], *frustums[p.b]);
      if (merged) {
        ++out.merges;
        if (!detail::emit_box(*merged, lead, score, frame.index, cfg.estimator, true, out))
          ++out.dropped;
        continue;
      }
      ++out.merge_rejected;
    }
    // One box per matched pair: the better-scored frustum with support wins.
    const std::size_t pick = frustums[best] ? best : other;
    if (!frustums[pick] || !detail::emit_box(*frustums[pick], lead, score, frame.index,
                                             cfg.estimator, false, out))
      ++out.dropped;
  }
  for (std::size_t i : out.matches->unmatched) single(i);
  return out;
}

// ---------------------------------------------------------------------------
// Whole runs

/// Detections per frame, either simulated from the scene or supplied.
using DetectionsByFrame = std::map<int, std::vector<Detection2D>>;

inline DetectionsByFrame simulate_scene_detections(const Scene& scene, const GenSpec& gen) {
  DetectionsByFrame out;
  for (const auto& f : scene.frames)
    out[f.index] = simulate_detections(scene.rig, f.objects, gen, f.index);
  return out;
}

namespace detail {

inline RegionReport evaluate_region(const CameraRig& rig, const std::vector<ScoredBox3D>& preds,
                                    const std::vector<GtBox3D>& gts, Region region,
                                    EvalConfig3D cfg) {
  cfg.region = region;
  std::vector<ScoredBox3D> p;
  std::vector<GtBox3D> g;
  for (const auto& b : preds)
    if (region == Region::kAll || visible_camera_count(rig, b.box) >= 2) p.push_back(b);
  for (const auto& b : gts)
    if (region == Region::kAll || visible_camera_count(rig, b.box) >= 2) g.push_back(b);
  RegionReport r;
  r.num_gt = g.size();
  r.num_pred = p.size();
  r.classes = ap_3d(p, g, cfg);
  return r;
}

}  // namespace detail

inline std::vector<GtBox3D> ground_truth_3d(const Scene& scene) {
  std::vector<GtBox3D> out;
  for (const auto& f : scene.frames)
    for (const auto& o : f.objects) out.push_back({f.index, o.class_id, o.box, o.uid});
  return out;
}

inline std::vector<ScoredBox3D> predictions_3d(const std::vector<FrameResult>& frames) {
  std::vector<ScoredBox3D> out;
  for (const auto& fr : frames)
    for (const auto& b : fr.boxes) out.push_back({b.frame, b.class_id, b.score, b.box});
  return out;
}

/// 3D metrics of `preds` against the scene ground truth in one region.
inline RegionReport evaluate_3d(const Scene& scene, const std::vector<ScoredBox3D>& preds,
                                Region region, const EvalConfig3D& cfg) {
  return detail::evaluate_region(scene.rig, preds, ground_truth_3d(scene), region, cfg);
}

/// Runs one variant over every frame of `scene`. Frames that fail are
/// recorded in the report and skipped.
inline Result<RunOutput> run_pipeline(const Scene& scene, PipelineVariant variant,
                                      const PipelineConfig& cfg,
                                      const DetectionsByFrame* detections = nullptr) {
  if (auto e = cfg.check()) return *e;
  if (auto e = scene.rig.check()) return *e;
  const auto t0 = std::chrono::steady_clock::now();

  DetectionsByFrame simulated;
  if (!detections) {
    simulated = simulate_scene_detections(scene, cfg.gen);
    detections = &simulated;
  }

  RunOutput out;
  RunReport& rep = out.report;
  rep.variant = variant;
  rep.config = cfg;
  std::vector<ReidStats> reid;
  std::vector<Detection2DRecord> det2d;
  std::vector<GroundTruth2D> gt2d;

  for (const auto& frame : scene.frames) {
    ++rep.counters.frames;
    auto it = detections->find(frame.index);
    std::vector<Detection2D> dets = it != detections->end() ? it->second
                                                            : std::vector<Detection2D>{};
    auto fr = process_frame(scene.rig, frame, std::move(dets), variant, cfg);
    if (!fr) {
      ++rep.counters.frames_failed;
      rep.frame_errors.push_back("frame " + std::to_string(frame.index) + ": " +
                                 std::string(to_string(fr.code())) + ": " + fr.error().message);
      continue;
    }
    FrameResult& r = fr.value();
    rep.counters.detections += r.detections.size();
    rep.counters.boxes += r.boxes.size();
    rep.counters.merges += r.merges;
    rep.counters.merge_rejected += r.merge_rejected;
    rep.counters.dropped += r.dropped;
    if (r.reid) reid.push_back(*r.reid);
    for (const auto& d : r.detections)
      det2d.push_back({frame.index, d.camera_id, d.class_id, d.score, d.bbox});
    for (auto& g : ground_truth_2d(scene.rig, frame)) gt2d.push_back(g);
    out.frames.push_back(std::move(r));
  }

  rep.ap2d = ap_2d(det2d, gt2d, cfg.eval2d);
  if (variant == PipelineVariant::kTwoDPlusEmbedding || variant == PipelineVariant::kSiaNMS)
    rep.reid = accumulate(reid);
  const auto preds = predictions_3d(out.frames);
  const auto gts = ground_truth_3d(scene);
  for (Region region : {Region::kAll, Region::kOverlap})
    rep.regions[region] = detail::evaluate_region(scene.rig, preds, gts, region, cfg.eval3d);
  rep.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct ComparisonReport {
  std::vector<RunReport> runs;  // in kAllVariants order
};

/// All four variants on identical detections.
inline Result<ComparisonReport> compare_variants(const Scene& scene, const PipelineConfig& cfg,
                                                 const DetectionsByFrame* detections = nullptr) {
  DetectionsByFrame simulated;
  if (!detections) {
    simulated = simulate_scene_detections(scene, cfg.gen);
    detections = &simulated;
  }
  ComparisonReport out;
  for (PipelineVariant v : kAllVariants) {
    auto run = run_pipeline(scene, v, cfg, detections);
    if (!run) return run.error();
    out.runs.push_back(std::move(run).value().report);
  }
  return out;
}

/// Generates a full scene (rig plus n_frames frames) from the specs.
struct GeneratedScene {
  Scene scene;
  std::vector<std::vector<std::int64_t>> point_owner;  // per frame
};

inline Result<GeneratedScene> generate_scene(const RigSpec& rig_spec, const GenSpec& gen) {
  if (auto e = gen.check()) return *e;
  auto rig = make_rig(rig_spec);
  if (!rig) return rig.error();
  GeneratedScene out;
  out.scene.rig = std::move(rig).value();
  for (int i = 0; i < gen.n_frames; ++i) {
    GeneratedFrame g = generate_frame(out.scene.rig, gen, i);
    out.scene.frames.push_back(std::move(g.frame));
    out.point_owner.push_back(std::move(g.point_owner));
  }
  return out;
}

}  // namespace crossview

#endif  // CROSSVIEW_PIPELINE_HPP_
