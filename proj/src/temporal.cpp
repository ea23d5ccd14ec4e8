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

#include "nrsfm/temporal.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

#include "nrsfm/block_tridiagonal.hpp"

namespace nrsfm {

namespace {

void check_dims(const TrackMatrix& tracks, const RotationStack& rotations) {
  if (tracks.frames() != rotations.frames()) {
    throw ShapeError("tracks have " + std::to_string(tracks.frames()) + " frames but " +
                     std::to_string(rotations.frames()) + " cameras were given");
  }
}

// Smallest admissible Schur pivot eigenvalue, relative to the largest diagonal.
constexpr double kPivotTolerance = 1e-15;

}  // namespace

Matrix TemporalOperator::apply(const Matrix& shape) const {
  if (shape.rows() != 3 * frames_) throw ShapeError("temporal operator: row mismatch");
  Matrix out(rows(), shape.cols());
  for (int i = 0; i + 1 < frames_; ++i) {
    out.middleRows<3>(3 * i) = shape.middleRows<3>(3 * i) - shape.middleRows<3>(3 * i + 3);
  }
  return out;
}

Matrix TemporalOperator::apply_transpose(const Matrix& diffs) const {
  if (diffs.rows() != rows()) throw ShapeError("temporal operator: row mismatch");
  Matrix out = Matrix::Zero(3 * frames_, diffs.cols());
  for (int i = 0; i + 1 < frames_; ++i) {
    out.middleRows<3>(3 * i) += diffs.middleRows<3>(3 * i);
    out.middleRows<3>(3 * i + 3) -= diffs.middleRows<3>(3 * i);
  }
  return out;
}

Matrix TemporalOperator::apply_normal(const Matrix& shape) const {
  Matrix out = Matrix::Zero(shape.rows(), shape.cols());
  add_normal(shape, 1.0, out);
  return out;
}

void TemporalOperator::add_normal(const Matrix& shape, double scale, Matrix& out) const {
  if (shape.rows() != 3 * frames_ || out.rows() != shape.rows() || out.cols() != shape.cols()) {
    throw ShapeError("temporal operator: row mismatch");
  }
  for (int i = 0; i + 1 < frames_; ++i) {
    // Each difference S_i - S_{i+1} contributes +d to frame i and -d to frame i+1.
    const auto d = (shape.middleRows<3>(3 * i) - shape.middleRows<3>(3 * i + 3)) * scale;
    out.middleRows<3>(3 * i) += d;
    out.middleRows<3>(3 * i + 3) -= d;
  }
}

int TemporalOperator::degree(int frame) const {
  if (frames_ == 1) return 0;
  return (frame == 0 || frame == frames_ - 1) ? 1 : 2;
}

TemporalOperator build_temporal_operator(int frames, int order) {
  if (frames < 1) throw ShapeError("temporal operator needs at least one frame");
  if (order != 1) {
    throw UnsupportedOrderError("temporal smoothness order " + std::to_string(order) +
                                " is not supported; only first order is implemented");
  }
  return TemporalOperator(frames, order);
}

ShapeStack solve_pseudo_inverse(const TrackMatrix& tracks, const RotationStack& rotations) {
  check_dims(tracks, rotations);
  const int frames = tracks.frames();
  Matrix out(3 * frames, tracks.points());
  for (int i = 0; i < frames; ++i) {
    const CameraBlock& r = rotations.block(i);
    const Eigen::Matrix<double, 3, 2> pinv = r.transpose() * (r * r.transpose()).inverse();
    out.middleRows<3>(3 * i).noalias() = pinv * tracks.frame(i);
  }
  return ShapeStack(std::move(out));
}

ShapeStack solve_temporal(const TrackMatrix& tracks, const RotationStack& rotations,
                          double lambda) {
  check_dims(tracks, rotations);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DataValidationError("temporal weight must be finite and non-negative");
  }
  if (lambda == 0.0) return solve_pseudo_inverse(tracks, rotations);

  const int frames = tracks.frames();
  const TemporalOperator h = build_temporal_operator(frames);
  std::vector<Eigen::Matrix3d> diagonal(frames);
  std::vector<Eigen::Matrix3d> upper(frames - 1, -lambda * Eigen::Matrix3d::Identity());
  for (int i = 0; i < frames; ++i) {
    diagonal[i] = rotations.block(i).transpose() * rotations.block(i) +
                  lambda * h.degree(i) * Eigen::Matrix3d::Identity();
  }
  const auto factor = BlockTridiagonalCholesky::factor(diagonal, upper, kPivotTolerance);
  if (!factor) {
    throw RankDeficiencyError(
        "temporal system R^T R + lambda H^T H is singular (cameras share a viewing "
        "direction); use a larger lambda or more varied rotations");
  }
  Matrix s = rotations.apply_transpose(tracks.data());
  factor->solve_in_place(s);
  return ShapeStack(std::move(s));
}

}  // namespace nrsfm
