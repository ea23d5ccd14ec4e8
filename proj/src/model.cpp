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

#include "nrsfm/model.hpp"

#include <string>

namespace nrsfm {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw DataValidationError(std::string(what) + " contains non-finite entries");
  }
}

}  // namespace

TrackMatrix::TrackMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 2 || data_.rows() % 2 != 0 || data_.cols() < 1) {
    throw ShapeError("track matrix must be 2F x P with F >= 1, P >= 1; got " +
                     std::to_string(data_.rows()) + " x " + std::to_string(data_.cols()));
  }
  require_finite(data_, "track matrix");
}

ShapeStack::ShapeStack(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 3 || data_.rows() % 3 != 0 || data_.cols() < 1) {
    throw ShapeError("shape stack must be 3F x P with F >= 1, P >= 1; got " +
                     std::to_string(data_.rows()) + " x " + std::to_string(data_.cols()));
  }
  require_finite(data_, "shape stack");
}

Vector ShapeStack::vec() const {
  return Eigen::Map<const Vector>(data_.data(), data_.size());
}

ShapeStack ShapeStack::ivec(const Vector& v, int frames, int points) {
  const Eigen::Index expected = Eigen::Index{3} * frames * points;
  if (v.size() != expected) {
    throw ShapeError("ivec: vector of length " + std::to_string(v.size()) +
                     " cannot be reshaped to " + std::to_string(3 * frames) + " x " +
                     std::to_string(points));
  }
  return ShapeStack(Eigen::Map<const Matrix>(v.data(), 3 * frames, points));
}

Matrix RotationStack::apply(const Matrix& shape) const {
  if (shape.rows() != 3 * frames()) {
    throw ShapeError("rotation stack has " + std::to_string(frames()) +
                     " frames but shape has " + std::to_string(shape.rows()) + " rows");
  }
  Matrix out(2 * frames(), shape.cols());
  for (int i = 0; i < frames(); ++i) {
    out.middleRows<2>(2 * i).noalias() = blocks_[i] * shape.middleRows<3>(3 * i);
  }
  return out;
}

Matrix RotationStack::apply_transpose(const Matrix& tracks) const {
  if (tracks.rows() != 2 * frames()) {
    throw ShapeError("rotation stack has " + std::to_string(frames()) +
                     " frames but tracks have " + std::to_string(tracks.rows()) + " rows");
  }
  Matrix out(3 * frames(), tracks.cols());
  for (int i = 0; i < frames(); ++i) {
    out.middleRows<3>(3 * i).noalias() = blocks_[i].transpose() * tracks.middleRows<2>(2 * i);
  }
  return out;
}

GridTopology GridTopology::full(int rows, int cols) {
  return from_mask(rows, cols, std::vector<bool>(static_cast<size_t>(rows) * cols, true));
}

GridTopology GridTopology::from_mask(int rows, int cols, const std::vector<bool>& mask) {
  if (rows < 1 || cols < 1) {
    throw ShapeError("grid must have at least one row and one column");
  }
  if (mask.size() != static_cast<size_t>(rows) * cols) {
    throw ShapeError("grid mask has " + std::to_string(mask.size()) + " cells, expected " +
                     std::to_string(rows * cols));
  }
  GridTopology g;
  g.rows_ = rows;
  g.cols_ = cols;
  g.index_.assign(mask.size(), kAbsent);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (mask[static_cast<size_t>(r) * cols + c]) {
        g.index_[static_cast<size_t>(r) * cols + c] = static_cast<int>(g.cells_.size());
        g.cells_.emplace_back(r, c);
      }
    }
  }
  if (g.cells_.empty()) {
    throw DataValidationError("grid mask has no present cells");
  }
  return g;
}

int GridTopology::index(int row, int col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) return kAbsent;
  return index_[static_cast<size_t>(row) * cols_ + col];
}

std::vector<int> GridTopology::neighbors(int point) const {
  const auto [r, c] = cells_.at(point);
  std::vector<int> out;
  out.reserve(8);
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      if (const int k = index(r + dr, c + dc); k != kAbsent) out.push_back(k);
    }
  }
  return out;
}

std::vector<bool> GridTopology::mask() const {
  std::vector<bool> m(index_.size());
  for (size_t i = 0; i < index_.size(); ++i) m[i] = index_[i] != kAbsent;
  return m;
}

CenteredTracks center_tracks(const TrackMatrix& tracks) {
  // TrackMatrix construction already rejects non-finite data.
  Vector offsets = tracks.data().rowwise().mean();
  Matrix centered = tracks.data().colwise() - offsets;
  return {TrackMatrix(std::move(centered)), std::move(offsets)};
}

RotationStack assemble_rotation(std::span<const CameraBlock> blocks) {
  if (blocks.empty()) {
    throw ShapeError("rotation stack needs at least one frame");
  }
  std::vector<CameraBlock> out(blocks.begin(), blocks.end());
  for (size_t i = 0; i < out.size(); ++i) {
    if (!out[i].allFinite()) {
      throw RotationValidityError(static_cast<int>(i),
                                  "camera block " + std::to_string(i) + " is not finite");
    }
    const double residual =
        (out[i] * out[i].transpose() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
    if (residual > kOrthonormalityTolerance) {
      throw RotationValidityError(
          static_cast<int>(i), "camera block " + std::to_string(i) +
                                   " is not row-orthonormal (max |R R^T - I| = " +
                                   std::to_string(residual) + ")");
    }
  }
  return RotationStack(std::move(out));
}

TrackMatrix reproject(const RotationStack& rotations, const ShapeStack& shape) {
  if (rotations.frames() != shape.frames()) {
    throw ShapeError("reproject: " + std::to_string(rotations.frames()) +
                     " cameras vs " + std::to_string(shape.frames()) + " shape frames");
  }
  return TrackMatrix(rotations.apply(shape.data()));
}

}  // namespace nrsfm
