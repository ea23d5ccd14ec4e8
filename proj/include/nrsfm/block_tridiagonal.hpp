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

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace nrsfm {

// Block Cholesky factorization of a symmetric positive definite
// block-tridiagonal matrix with 3x3 blocks:
//
//   [ D0  C0             ]
//   [ C0' D1  C1         ]
//   [     C1' D2  ...    ]
//
// Factored once, then applied to any number of right-hand sides.
class BlockTridiagonalCholesky {
 public:
  using Block = Eigen::Matrix3d;

  // Returns nullopt when a Schur-complement pivot is not positive definite,
  // or when its smallest eigenvalue falls below pivot_tolerance * scale
  // (scale = largest diagonal entry). pivot_tolerance = 0 only requires the
  // Cholesky of each pivot to succeed.
  static std::optional<BlockTridiagonalCholesky> factor(const std::vector<Block>& diagonal,
                                                        const std::vector<Block>& upper,
                                                        double pivot_tolerance = 0.0);

  int blocks() const noexcept { return static_cast<int>(lower_inv_.size()); }

  // In-place solve; rhs has 3 * blocks() rows and any number of columns.
  void solve_in_place(Eigen::Ref<Eigen::MatrixXd> rhs) const;

 private:
  BlockTridiagonalCholesky() = default;

  std::vector<Block> lower_inv_;  // inverse Cholesky factor of each Schur pivot
  std::vector<Block> coupling_;  // L_i^{-1} C_i
};

}  // namespace nrsfm
