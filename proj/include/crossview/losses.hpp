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

// Detector-head and re-identification losses with analytic gradients.
//
// Per image:  L_box_head = sum_F smooth_l1(reg residual) + sum_{F+B} CE(logits)
// Per batch:  L_batch    = L_reid + sum_images L_box_head
// Re-ID:      sum over positive pairs of 0.5*max(d - alpha, 0)^2 plus the same
//             number of hardest negative pairs, 0.5*max(beta - d, 0)^2.

#ifndef CROSSVIEW_LOSSES_HPP_
#define CROSSVIEW_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"

namespace crossview {

struct LossConfig {
  double alpha = 0.5;
  double beta = 1.5;
  double smooth_l1_delta = 1.0;
  double foreground_iou = 0.7;

  std::optional<Error> check() const {
    if (!(alpha >= 0.0 && alpha < beta))
      return make_error(ErrorCode::kInvalidArgument, "need 0 <= alpha < beta");
    if (!(smooth_l1_delta > 0.0))
      return make_error(ErrorCode::kInvalidArgument, "smooth_l1_delta must be > 0");
    if (!(foreground_iou >= 0.0 && foreground_iou <= 1.0))
      return make_error(ErrorCode::kInvalidArgument, "foreground_iou not in [0,1]");
    return std::nullopt;
  }

  /// Default acceptance threshold for embedding distances.
  double default_tau() const { return 0.5 * (alpha + beta); }

  bool operator==(const LossConfig&) const = default;
};

struct ScalarLoss {
  double value = 0.0;
  double grad = 0.0;
};

struct VectorLoss {
  double value = 0.0;
  Eigen::VectorXd grad;
};

inline ScalarLoss smooth_l1(double x, double delta = 1.0) {
  if (std::abs(x) < delta) return {0.5 * x * x / delta, x / delta};
  return {std::abs(x) - 0.5 * delta, x > 0.0 ? 1.0 : -1.0};
}

/// Sum of element-wise smooth-L1 over a residual vector.
inline VectorLoss smooth_l1(const Eigen::VectorXd& residual, double delta = 1.0) {
  VectorLoss out{0.0, Eigen::VectorXd::Zero(residual.size())};
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    const ScalarLoss s = smooth_l1(residual[i], delta);
    out.value += s.value;
    out.grad[i] = s.grad;
  }
  return out;
}

/// -log softmax(logits)[true_class] using a max-shifted log-sum-exp.
inline VectorLoss cross_entropy(const Eigen::VectorXd& logits, int true_class) {
  const Eigen::Index k = logits.size();
  if (true_class < 0 || true_class >= k)
    throw CrossviewError(ErrorCode::kInvalidArgument, "class index out of range");
  Eigen::Index arg = 0;
  const double m = logits.maxCoeff(&arg);
  double rest = 0.0;  // sum of exp(l_j - m) over j != arg
  for (Eigen::Index j = 0; j < k; ++j)
    if (j != arg) rest += std::exp(logits[j] - m);
  const double log_z = std::log1p(rest);  // log sum exp(l - m)
  VectorLoss out;
  out.value = (m - logits[true_class]) + log_z;
  out.grad = (logits.array() - m - log_z).exp().matrix();  // softmax
  out.grad[true_class] -= 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Contrastive terms

struct PairLoss {
  double value = 0.0;
  double distance = 0.0;
  Embedding grad_a;
  Embedding grad_b;
};

inline void require_same_dims(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw CrossviewError(ErrorCode::kMismatchedDims, "embedding sizes differ");
}

/// 0.5 * max(||a - b|| - alpha, 0)^2. Subgradient 0 at ||a - b|| = 0.
inline PairLoss positive_pair_loss(const Embedding& a, const Embedding& b,
                                   double alpha) {
  require_same_dims(a, b);
  PairLoss out;
  const Embedding diff = a - b;
  out.distance = diff.norm();
  const double hinge = std::max(out.distance - alpha, 0.0);
  out.value = 0.5 * hinge * hinge;
  if (hinge > 0.0 && out.distance > 0.0) {
    out.grad_a = (hinge / out.distance) * diff;
  } else {
    out.grad_a = Embedding::Zero(a.size());
  }
  out.grad_b = -out.grad_a;
  return out;
}

/// 0.5 * max(beta - ||a - b||, 0)^2. Subgradient 0 at ||a - b|| = 0.
inline PairLoss negative_pair_loss(const Embedding& a, const Embedding& b,
                                   double beta) {
  require_same_dims(a, b);
  PairLoss out;
  const Embedding diff = a - b;
  out.distance = diff.norm();
  const double hinge = std::max(beta - out.distance, 0.0);
  out.value = 0.5 * hinge * hinge;
  if (hinge > 0.0 && out.distance > 0.0) {
    out.grad_a = (-hinge / out.distance) * diff;
  } else {
    out.grad_a = Embedding::Zero(a.size());
  }
  out.grad_b = -out.grad_a;
  return out;
}

struct ContrastiveTerms {
  double value = 0.0;
  Embedding grad_reference;
  Embedding grad_positive;
  Embedding grad_negative;
};

/// One (reference, positive, negative) summand of the double margin
/// contrastive loss.
inline ContrastiveTerms contrastive_pair_terms(const Embedding& r,
                                               const Embedding& p,
                                               const Embedding& n,
                                               const LossConfig& cfg) {
  const PairLoss pos = positive_pair_loss(r, p, cfg.alpha);
  const PairLoss neg = negative_pair_loss(r, n, cfg.beta);
  return {pos.value + neg.value, pos.grad_a + neg.grad_a, pos.grad_b,
          neg.grad_b};
}

// ---------------------------------------------------------------------------
// Hard negative mining

struct EmbeddingPair {
  std::size_t a = 0;
  std::size_t b = 0;
};

struct ScoredPair {
  EmbeddingPair pair;
  double loss = 0.0;
};

/// Indices into `negatives` of the min(|positives|, |negatives|) pairs with the
/// largest loss, in selection order. Ties go to the lower index.
inline std::vector<std::size_t> ohem_select(std::span<const EmbeddingPair> positives,
                                            std::span<const ScoredPair> negatives) {
  std::vector<std::size_t> order(negatives.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return negatives[i].loss > negatives[j].loss;
  });
  order.resize(std::min(positives.size(), negatives.size()));
  return order;
}

// ---------------------------------------------------------------------------
// Batch composition

/// One region proposal of one image as seen by the loss.
struct ProposalPrediction {
  BBox2D box;
  Eigen::Vector4d deltas = Eigen::Vector4d::Zero();  // (dx, dy, dw, dh)
  Eigen::VectorXd logits;                            // index 0 = background
  std::optional<Embedding> embedding;
};

struct GroundTruthBox {
  BBox2D box;
  int class_id = kCar;
  std::int64_t uid = 0;
};

struct ImageLossInput {
  std::vector<ProposalPrediction> proposals;
  std::vector<GroundTruthBox> ground_truth;
};

struct ProposalGradient {
  Eigen::Vector4d deltas = Eigen::Vector4d::Zero();
  Eigen::VectorXd logits;
  Embedding embedding;
};

struct BatchLossGradient {
  std::vector<std::vector<ProposalGradient>> images;
};

struct BatchLossBreakdown {
  std::vector<double> per_image_box_head;
  std::vector<std::size_t> foreground;
  std::vector<std::size_t> background;
  std::size_t positive_pairs = 0;
  std::size_t selected_negatives = 0;
  double reid = 0.0;
  double total = 0.0;
};

/// Regression target in the usual center/log-size parameterization.
inline Eigen::Vector4d encode_box_target(const BBox2D& proposal, const BBox2D& gt) {
  const double pw = proposal.width(), ph = proposal.height();
  const double px = proposal.x_min + 0.5 * pw, py = proposal.y_min + 0.5 * ph;
  const double gw = gt.width(), gh = gt.height();
  const double gx = gt.x_min + 0.5 * gw, gy = gt.y_min + 0.5 * gh;
  return {(gx - px) / pw, (gy - py) / ph, std::log(gw / pw), std::log(gh / ph)};
}

/// Sum independent of input order: values are added in sorted order.
inline double order_independent_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

inline Result<BatchLossBreakdown> batch_loss(std::span<const ImageLossInput> images,
                                             const LossConfig& cfg,
                                             BatchLossGradient* grad = nullptr) {
  if (auto e = cfg.check()) return *e;
  BatchLossBreakdown out;
  if (grad) grad->images.assign(images.size(), {});

  struct ForegroundRef {
    std::size_t image, proposal;
    std::int64_t uid;
    const Embedding* embedding;
  };
  std::vector<ForegroundRef> foreground;
  std::optional<Eigen::Index> dims;

  for (std::size_t n = 0; n < images.size(); ++n) {
    const ImageLossInput& img = images[n];
    double box_head = 0.0;
    std::size_t f_count = 0, b_count = 0;
    if (grad) grad->images[n].resize(img.proposals.size());
    for (std::size_t i = 0; i < img.proposals.size(); ++i) {
      const ProposalPrediction& prop = img.proposals[i];
      double best_iou = 0.0;
      const GroundTruthBox* best = nullptr;
      for (const auto& gt : img.ground_truth) {
        const double iou = iou2d(prop.box, gt.box);
        if (iou > best_iou) {
          best_iou = iou;
          best = &gt;
        }
      }
      const bool is_fg = best && best_iou > cfg.foreground_iou;
      const int target = is_fg ? best->class_id : kBackground;
      if (target >= prop.logits.size())
        return make_error(ErrorCode::kMismatchedDims, "logits shorter than class id");
      const VectorLoss ce = cross_entropy(prop.logits, target);
      box_head += ce.value;
      ProposalGradient* g = grad ? &grad->images[n][i] : nullptr;
      if (g) {
        g->logits = ce.grad;
        if (prop.embedding) g->embedding = Embedding::Zero(prop.embedding->size());
      }
      if (is_fg) {
        ++f_count;
        const Eigen::VectorXd residual = prop.deltas - encode_box_target(prop.box, best->box);
        const VectorLoss reg = smooth_l1(residual, cfg.smooth_l1_delta);
        box_head += reg.value;
        if (g) g->deltas = reg.grad;
        if (prop.embedding) {
          if (dims && *dims != prop.embedding->size())
            return make_error(ErrorCode::kMismatchedDims, "embedding sizes differ");
          dims = prop.embedding->size();
          foreground.push_back({n, i, best->uid, &*prop.embedding});
        }
      } else {
        ++b_count;
      }
    }
    out.per_image_box_head.push_back(box_head);
    out.foreground.push_back(f_count);
    out.background.push_back(b_count);
  }

  std::vector<EmbeddingPair> positives;
  std::vector<ScoredPair> negatives;
  std::vector<double> pos_values;
  for (std::size_t i = 0; i < foreground.size(); ++i) {
    for (std::size_t j = i + 1; j < foreground.size(); ++j) {
      if (foreground[i].uid == foreground[j].uid) {
        positives.push_back({i, j});
      } else {
        const double d = (*foreground[i].embedding - *foreground[j].embedding).norm();
        const double hinge = std::max(cfg.beta - d, 0.0);
        negatives.push_back({{i, j}, 0.5 * hinge * hinge});
      }
    }
  }
  const auto selected = ohem_select(positives, negatives);
  out.positive_pairs = positives.size();
  out.selected_negatives = selected.size();

  std::vector<double> reid_terms;
  auto add_grad = [&](const ForegroundRef& ref, const Embedding& g) {
    if (grad) grad->images[ref.image][ref.proposal].embedding += g;
  };
  for (const EmbeddingPair& p : positives) {
    const PairLoss l = positive_pair_loss(*foreground[p.a].embedding,
                                          *foreground[p.b].embedding, cfg.alpha);
    reid_terms.push_back(l.value);
    add_grad(foreground[p.a], l.grad_a);
    add_grad(foreground[p.b], l.grad_b);
  }
  for (std::size_t s : selected) {
    const EmbeddingPair& p = negatives[s].pair;
    const PairLoss l = negative_pair_loss(*foreground[p.a].embedding,
                                          *foreground[p.b].embedding, cfg.beta);
    reid_terms.push_back(l.value);
    add_grad(foreground[p.a], l.grad_a);
    add_grad(foreground[p.b], l.grad_b);
  }
  out.reid = order_independent_sum(std::move(reid_terms));
  out.total = out.reid + order_independent_sum(out.per_image_box_head);
  return out;
}

}  // namespace crossview

#endif  // CROSSVIEW_LOSSES_HPP_
