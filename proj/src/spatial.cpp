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

#include "nrsfm/spatial.hpp"

#include <string>
#include <vector>

namespace nrsfm {

SpatialOperator::SpatialOperator(GridTopology topology, SparseMatrix laplacian)
    : topology_(std::move(topology)),
      laplacian_(std::move(laplacian)) {
  // Column norms of L give diag(L^T L).
  normal_diagonal_ = Vector::Zero(laplacian_.cols());
  for (Eigen::Index r = 0; r < laplacian_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(laplacian_, r); it; ++it) {
      normal_diagonal_(it.col()) += it.value() * it.value();
    }
  }
}

Matrix SpatialOperator::apply(const Matrix& shape) const {
  Matrix out;
  apply_into(shape, out);
  return out;
}

void SpatialOperator::apply_into(const Matrix& shape, Matrix& out) const {
  if (shape.cols() != points()) {
    throw ShapeError("spatial operator is defined on " + std::to_string(points()) +
                     " points, shape has " + std::to_string(shape.cols()));
  }
  // Row sums are zero, so row j of L acting on S is the sum of neighbour
  // differences; constants cancel exactly in this form.
  out.setZero(shape.rows(), shape.cols());
  for (Eigen::Index j = 0; j < laplacian_.outerSize(); ++j) {
    auto col = out.col(j);
    const auto center = shape.col(j);
    for (SparseMatrix::InnerIterator it(laplacian_, j); it; ++it) {
      if (it.col() == j) continue;
      col += it.value() * (shape.col(it.col()) - center);
    }
  }
}

Matrix SpatialOperator::apply_normal(const Matrix& shape) const {
  // L is symmetric: neighbourhoods are mutual and off-diagonal weights are 1.
  return apply(apply(shape));
}

SpatialOperator build_laplacian(const GridTopology& topology) {
  const int n = topology.points();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(n) * 9);
  for (int j = 0; j < n; ++j) {
    const auto nbrs = topology.neighbors(j);
    // Truncated stencil at borders and holes keeps the row sum at zero.
    triplets.emplace_back(j, j, -static_cast<double>(nbrs.size()));
    for (const int k : nbrs) triplets.emplace_back(j, k, 1.0);
  }
  SparseMatrix l(n, n);
  l.setFromTriplets(triplets.begin(), triplets.end());
  l.makeCompressed();
  return SpatialOperator(topology, std::move(l));
}

ShapeStack apply_spatial(const SpatialOperator& op, const ShapeStack& shape) {
  return ShapeStack(op.apply(shape.data()));
}

}  // namespace nrsfm
