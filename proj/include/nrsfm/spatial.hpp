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

#include <Eigen/SparseCore>

#include "nrsfm/model.hpp"

namespace nrsfm {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// 8-neighbor Laplacian filter on a pixel grid. Row j of the P x P matrix
// has +1 for each present neighbor and minus the neighbor count on the
// diagonal, so rows sum to zero. The same matrix filters every one of the
// 3F coordinate rows of a shape stack.
class SpatialOperator {
 public:
  SpatialOperator() = default;
  SpatialOperator(GridTopology topology, SparseMatrix laplacian);

  const GridTopology& topology() const noexcept { return topology_; }
  const SparseMatrix& laplacian() const noexcept { return laplacian_; }
  int points() const noexcept { return static_cast<int>(laplacian_.rows()); }

  // S L^T: filters each row of a k x P matrix.
  Matrix apply(const Matrix& shape) const;
  // Writes S L^T into out, which must not alias shape.
  void apply_into(const Matrix& shape, Matrix& out) const;
  // S L^T L.
  Matrix apply_normal(const Matrix& shape) const;
  // Diagonal of L^T L.
  const Vector& normal_diagonal() const noexcept { return normal_diagonal_; }

 private:
  GridTopology topology_;
  SparseMatrix laplacian_;
  Vector normal_diagonal_;
};

SpatialOperator build_laplacian(const GridTopology& topology);

ShapeStack apply_spatial(const SpatialOperator& op, const ShapeStack& shape);

}  // namespace nrsfm
