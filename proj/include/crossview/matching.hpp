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

// Cross-camera association of detections by embedding distance.

#ifndef CROSSVIEW_MATCHING_HPP_
#define CROSSVIEW_MATCHING_HPP_

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"

namespace crossview {

/// Dense rows x cols matrix where individual cells may be masked out.
template <typename T>
class MaskedMatrix {
 public:
  MaskedMatrix() = default;
  MaskedMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, T{}), allowed_(rows * cols, 1) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  const T& operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  T& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  bool allowed(std::size_t r, std::size_t c) const { return allowed_[r * cols_ + c] != 0; }
  void mask(std::size_t r, std::size_t c) { allowed_[r * cols_ + c] = 0; }

  std::size_t allowed_count() const {
    return static_cast<std::size_t>(std::count(allowed_.begin(), allowed_.end(), 1));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
  std::vector<unsigned char> allowed_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), row-ascending
  double cost = 0.0;
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
};

/// Minimum-cost assignment on a rectangular matrix with masked cells.
///
/// The matrix is padded to square; padding and masked cells get a cost large
/// enough that the solution first maximizes the number of unmasked pairs and
/// then minimizes their total cost. Pairs landing on padded or masked cells
/// are reported as unmatched.
template <typename T>
Assignment hungarian(const MaskedMatrix<T>& costs) {
  const std::size_t rows = costs.rows(), cols = costs.cols();
  const std::size_t n = std::max(rows, cols);
  Assignment out;
  if (rows == 0 || cols == 0) {
    for (std::size_t r = 0; r < rows; ++r) out.unmatched_rows.push_back(r);
    for (std::size_t c = 0; c < cols; ++c) out.unmatched_cols.push_back(c);
    return out;
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (costs.allowed(r, c)) {
        lo = std::min(lo, static_cast<double>(costs(r, c)));
        hi = std::max(hi, static_cast<double>(costs(r, c)));
      }
  if (!(lo <= hi)) lo = hi = 0.0;
  const double big = hi + static_cast<double>(n) * (hi - lo) + 1.0;

  auto cell = [&](std::size_t r, std::size_t c) -> double {
    if (r < rows && c < cols && costs.allowed(r, c)) return static_cast<double>(costs(r, c));
    return big;
  };

  // Shortest augmenting path with row/column potentials; 1-based, index 0 is
  // the virtual source.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(rows, n);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t r = match_col[j] - 1;
    const std::size_t c = j - 1;
    if (r < rows && c < cols && costs.allowed(r, c)) row_to_col[r] = c;
  }
  std::vector<char> col_used(cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_to_col[r] == n) {
      out.unmatched_rows.push_back(r);
      continue;
    }
    out.pairs.emplace_back(r, row_to_col[r]);
    out.cost += static_cast<double>(costs(r, row_to_col[r]));
    col_used[row_to_col[r]] = 1;
  }
  for (std::size_t c = 0; c < cols; ++c)
    if (!col_used[c]) out.unmatched_cols.push_back(c);
  return out;
}

// ---------------------------------------------------------------------------
// Detection association

struct DistanceMatrix {
  std::vector<std::size_t> rows;  // indices of the first camera's detections
  std::vector<std::size_t> cols;  // indices of the second camera's detections
  MaskedMatrix<double> values;    // masked where classes differ
};

/// Euclidean embedding distance for every same-class pair; other pairs masked.
/// `rows` and `cols` index into `detections`.
inline Result<DistanceMatrix> build_distance_matrix(std::span<const Detection2D> detections,
                                                    std::vector<std::size_t> rows,
                                                    std::vector<std::size_t> cols) {
  for (auto idx : {std::span<const std::size_t>(rows), std::span<const std::size_t>(cols)})
    for (std::size_t i : idx)
      if (!detections[i].embedding)
        return make_error(ErrorCode::kMissingEmbedding, "detection has no embedding");
  DistanceMatrix m{std::move(rows), std::move(cols), {}};
  m.values = MaskedMatrix<double>(m.rows.size(), m.cols.size());
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    const Detection2D& a = detections[m.rows[r]];
    for (std::size_t c = 0; c < m.cols.size(); ++c) {
      const Detection2D& b = detections[m.cols[c]];
      if (a.class_id != b.class_id) {
        m.values.mask(r, c);
        continue;
      }
      if (a.embedding->size() != b.embedding->size())
        return make_error(ErrorCode::kMismatchedDims, "embedding sizes differ");
      m.values(r, c) = (*a.embedding - *b.embedding).norm();
    }
  }
  return m;
}

/// Convenience overload: rows are all of `dets_a`, columns all of `dets_b`.
inline Result<DistanceMatrix> build_distance_matrix(std::span<const Detection2D> dets_a,
                                                    std::span<const Detection2D> dets_b) {
  std::vector<Detection2D> all(dets_a.begin(), dets_a.end());
  all.insert(all.end(), dets_b.begin(), dets_b.end());
  std::vector<std::size_t> rows(dets_a.size()), cols(dets_b.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = dets_a.size() + j;
  auto m = build_distance_matrix(all, rows, cols);
  if (!m) return m;
  DistanceMatrix out = std::move(m).value();
  for (std::size_t j = 0; j < out.cols.size(); ++j) out.cols[j] = j;
  return out;
}

struct MatchedPair {
  std::size_t a = 0;  // detection index, camera camera_a
  std::size_t b = 0;  // detection index, camera camera_b
  int camera_a = 0;
  int camera_b = 0;
  double distance = 0.0;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> unmatched;  // ascending detection indices
};

/// Matches detections of one frame across every adjacent camera pair, in rig
/// adjacency order. A detection consumed by one camera pair is not offered to
/// later pairs. Assigned pairs farther apart than `tau` are dropped.
inline Result<MatchResult> match_adjacent(const CameraRig& rig,
                                          std::span<const Detection2D> detections,
                                          double tau) {
  if (!(tau > 0.0)) return make_error(ErrorCode::kInvalidArgument, "tau must be > 0");
  MatchResult out;
  std::vector<char> consumed(detections.size(), 0);
  for (const auto& [cam_a, cam_b] : rig.adjacency) {
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < detections.size(); ++i) {
      if (consumed[i]) continue;
      if (detections[i].camera_id == cam_a) rows.push_back(i);
      else if (detections[i].camera_id == cam_b) cols.push_back(i);
    }
    if (rows.empty() || cols.empty()) continue;
    auto m = build_distance_matrix(detections, std::move(rows), std::move(cols));
    if (!m) return m.error();
    const Assignment asg = hungarian(m->values);
    for (const auto& [r, c] : asg.pairs) {
      const double d = m->values(r, c);
      if (d > tau) continue;
      const std::size_t ia = m->rows[r], ib = m->cols[c];
      consumed[ia] = consumed[ib] = 1;
      out.pairs.push_back({ia, ib, cam_a, cam_b, d});
    }
  }
  for (std::size_t i = 0; i < detections.size(); ++i)
    if (!consumed[i]) out.unmatched.push_back(i);
  return out;
}

}  // namespace crossview

#endif  // CROSSVIEW_MATCHING_HPP_
