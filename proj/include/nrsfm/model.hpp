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

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nrsfm/errors.hpp"

namespace nrsfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CameraBlock = Eigen::Matrix<double, 2, 3>;

// Stacked 2D feature tracks, 2F x P. Rows 2i and 2i+1 hold the u and v
// coordinates of every point in frame i.
class TrackMatrix {
 public:
  TrackMatrix() = default;
  explicit TrackMatrix(Matrix data);

  int frames() const noexcept { return static_cast<int>(data_.rows() / 2); }
  int points() const noexcept { return static_cast<int>(data_.cols()); }
  const Matrix& data() const noexcept { return data_; }

  auto frame(int i) const { return data_.middleRows(2 * i, 2); }
  double max_abs() const { return data_.cwiseAbs().maxCoeff(); }

 private:
  Matrix data_;
};

// Non-rigid shape sequence, 3F x P. Frame i occupies rows 3i..3i+2.
class ShapeStack {
 public:
  ShapeStack() = default;
  explicit ShapeStack(Matrix data);

  int frames() const noexcept { return static_cast<int>(data_.rows() / 3); }
  int points() const noexcept { return static_cast<int>(data_.cols()); }
  const Matrix& data() const noexcept { return data_; }

  auto frame(int i) const { return data_.middleRows(3 * i, 3); }

  // Column-major vectorization of the 3F x P matrix.
  Vector vec() const;
  static ShapeStack ivec(const Vector& v, int frames, int points);

 private:
  Matrix data_;
};

// Block-diagonal orthographic camera stack. Never materialized densely.
class RotationStack {
 public:
  RotationStack() = default;

  int frames() const noexcept { return static_cast<int>(blocks_.size()); }
  const std::vector<CameraBlock>& blocks() const noexcept { return blocks_; }
  const CameraBlock& block(int i) const { return blocks_[i]; }

  // R * S for a 3F x k matrix; returns 2F x k.
  Matrix apply(const Matrix& shape) const;
  // R^T * X for a 2F x k matrix; returns 3F x k.
  Matrix apply_transpose(const Matrix& tracks) const;

 private:
  friend RotationStack assemble_rotation(std::span<const CameraBlock> blocks);
  explicit RotationStack(std::vector<CameraBlock> blocks)
      : blocks_(std::move(blocks)) {}

  std::vector<CameraBlock> blocks_;
};

// Pixel-grid neighborhood. Cells may be absent, in which case they carry
// no point and are skipped by every neighborhood query.
class GridTopology {
 public:
  static constexpr int kAbsent = -1;

  GridTopology() = default;
  // Every cell present; point index = row * cols + col.
  static GridTopology full(int rows, int cols);
  // Row-major mask; present cells are numbered in row-major order.
  static GridTopology from_mask(int rows, int cols, const std::vector<bool>& mask);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int points() const noexcept { return static_cast<int>(cells_.size()); }

  // Point index at (row, col), or kAbsent when outside the grid or absent.
  int index(int row, int col) const;
  std::pair<int, int> cell(int point) const { return cells_[point]; }
  // Present 8-connected neighbors, in raster order.
  std::vector<int> neighbors(int point) const;
  std::vector<bool> mask() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> index_;
  std::vector<std::pair<int, int>> cells_;
};

struct CenteredTracks {
  TrackMatrix tracks;
  Vector offsets;  // per-row mean removed, length 2F
};

CenteredTracks center_tracks(const TrackMatrix& tracks);

// Validates each block (R_i R_i^T = I within 1e-8) and builds the stack.
RotationStack assemble_rotation(std::span<const CameraBlock> blocks);

TrackMatrix reproject(const RotationStack& rotations, const ShapeStack& shape);

inline constexpr double kOrthonormalityTolerance = 1e-8;

}  // namespace nrsfm
