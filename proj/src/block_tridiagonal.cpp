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

#include "nrsfm/block_tridiagonal.hpp"

#include <cassert>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace nrsfm {

std::optional<BlockTridiagonalCholesky> BlockTridiagonalCholesky::factor(
    const std::vector<Block>& diagonal, const std::vector<Block>& upper,
    double pivot_tolerance) {
  const size_t n = diagonal.size();
  assert(n >= 1 && upper.size() + 1 == n);

  double scale = 0.0;
  for (const auto& d : diagonal) scale = std::max(scale, d.diagonal().maxCoeff());

  BlockTridiagonalCholesky f;
  f.lower_inv_.resize(n);
  f.coupling_.resize(n - 1);

  Block schur = diagonal[0];
  for (size_t i = 0; i < n; ++i) {
    if (pivot_tolerance > 0.0) {
      Eigen::SelfAdjointEigenSolver<Block> eig;
      eig.computeDirect(schur, Eigen::EigenvaluesOnly);
      if (!(eig.eigenvalues()(0) > pivot_tolerance * scale)) return std::nullopt;
    }
    Eigen::LLT<Block> llt(schur);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Block lower = llt.matrixL();
    f.lower_inv_[i] = lower.triangularView<Eigen::Lower>().solve(Block::Identity());
    if (i + 1 == n) break;
    f.coupling_[i] = f.lower_inv_[i] * upper[i];
    schur = diagonal[i + 1] - f.coupling_[i].transpose() * f.coupling_[i];
  }
  return f;
}

void BlockTridiagonalCholesky::solve_in_place(Eigen::Ref<Eigen::MatrixXd> rhs) const {
  const int n = blocks();
  assert(rhs.rows() == 3 * n);
  using Vec3 = Eigen::Vector3d;
  using Map3 = Eigen::Map<Vec3>;

  for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
    double* data = rhs.col(c).data();
    const auto x = [data](int i) { return Map3(data + 3 * i); };
    // Forward: L y = b.
    Vec3 y = lower_inv_[0] * x(0);
    x(0) = y;
    for (int i = 1; i < n; ++i) {
      y = lower_inv_[i] * (x(i) - coupling_[i - 1].transpose() * y);
      x(i) = y;
    }
    // Backward: L^T x = y.
    Vec3 next = lower_inv_[n - 1].transpose() * y;
    x(n - 1) = next;
    for (int i = n - 2; i >= 0; --i) {
      next = lower_inv_[i].transpose() * (x(i) - coupling_[i] * next);
      x(i) = next;
    }
  }
}

}  // namespace nrsfm
