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

#ifndef CROSSVIEW_REID_EVAL_HPP_
#define CROSSVIEW_REID_EVAL_HPP_

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "crossview/matching.hpp"
#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"

namespace crossview {

struct ReidStats {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;

  void finalize() {
    precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    f_score = precision + recall > 0.0
                  ? 2.0 * precision * recall / (precision + recall)
                  : 0.0;
  }

  bool operator==(const ReidStats&) const = default;
};

/// Scores produced cross-camera pairs against ground-truth identity.
///
/// Per adjacent camera pair, the candidate population is every same-class
/// (detection in A, detection in B) combination:
///   TP  produced pair, same truth uid
///   FP  produced pair, different truth uid
///   FN  same-uid candidate that was not produced
///   TN  different-uid candidate that was not produced
inline Result<ReidStats> evaluate_frame(const MatchResult& matches,
                                        std::span<const Detection2D> detections,
                                        const CameraRig& rig) {
  for (const auto& d : detections)
    if (!d.truth_uid)
      return make_error(ErrorCode::kMissingTruth, "detection has no truth uid");

  std::vector<std::pair<std::size_t, std::size_t>> produced;
  produced.reserve(matches.pairs.size());
  for (const auto& p : matches.pairs) produced.emplace_back(std::min(p.a, p.b), std::max(p.a, p.b));
  auto was_produced = [&](std::size_t i, std::size_t j) {
    const auto key = std::make_pair(std::min(i, j), std::max(i, j));
    return std::find(produced.begin(), produced.end(), key) != produced.end();
  };

  ReidStats s;
  for (const auto& p : matches.pairs) {
    if (*detections[p.a].truth_uid == *detections[p.b].truth_uid) ++s.tp;
    else ++s.fp;
  }
  for (const auto& [cam_a, cam_b] : rig.adjacency) {
    for (std::size_t i = 0; i < detections.size(); ++i) {
      if (detections[i].camera_id != cam_a) continue;
      for (std::size_t j = 0; j < detections.size(); ++j) {
        if (detections[j].camera_id != cam_b) continue;
        if (detections[i].class_id != detections[j].class_id) continue;
        if (was_produced(i, j)) continue;
        if (*detections[i].truth_uid == *detections[j].truth_uid) ++s.fn;
        else ++s.tn;
      }
    }
  }
  s.finalize();
  return s;
}

inline ReidStats accumulate(std::span<const ReidStats> stats) {
  ReidStats out;
  for (const auto& s : stats) {
    out.tp += s.tp;
    out.tn += s.tn;
    out.fp += s.fp;
    out.fn += s.fn;
  }
  out.finalize();
  return out;
}

}  // namespace crossview

#endif  // CROSSVIEW_REID_EVAL_HPP_
