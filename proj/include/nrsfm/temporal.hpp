// Copyright 2026 The nrsfm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "nrsfm/model.hpp"

namespace nrsfm {

// First-order temporal difference operator H (3(F-1) x 3F):
// (H S) block i = S_i - S_{i+1}. Applied blockwise, never stored.
class TemporalOperator {
 public:
  TemporalOperator() = default;
  TemporalOperator(int frames, int order) : frames_(frames), order_(order) {}

  int frames() const noexcept { return frames_; }
  int order() const noexcept { return order_; }
  int rows() const noexcept { return 3 * (frames_ - 1); }

  // H * S for a 3F x k matrix.
  Matrix apply(const Matrix& shape) const;
  // H^T * D for a 3(F-1) x k matrix.
  Matrix apply_transpose(const Matrix& diffs) const;
  // H^T H * S, i.e. the path-graph Laplacian in time applied per coordinate.
  Matrix apply_normal(const Matrix& shape) const;
  // Accumulates scale * H^T H * S into out.
  void add_normal(const Matrix& shape, double scale, Matrix& out) const;
  // Number of temporal neighbors of frame i (diagonal of the path Laplacian).
  int degree(int frame) const;

 private:
  int frames_ = 1;
  int order_ = 1;
};

TemporalOperator build_temporal_operator(int frames, int order = 1);

// Temporal-only closed form S = (R^T R + lambda H^T H)^{-1} R^T W.
// lambda = 0 falls back to solve_pseudo_inverse.
ShapeStack solve_temporal(const TrackMatrix& tracks, const RotationStack& rotations,
                          double lambda);

// S_PI = R^+ W, computed per frame.
ShapeStack solve_pseudo_inverse(const TrackMatrix& tracks, const RotationStack& rotations);

}  // namespace nrsfm
