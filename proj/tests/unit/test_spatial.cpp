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

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "nrsfm/errors.hpp"
#include "nrsfm/spatial.hpp"
#include "test_support.hpp"

using namespace nrsfm;
using namespace nrsfm::testing;

namespace {

bool interior(const GridTopology& g, int j) { return g.neighbors(j).size() == 8; }

Dense affine_shape(const GridTopology& g, int frames, std::mt19937_64& rng) {
  const Dense coeff = random_matrix(3 * frames, 3, rng);
  Dense s(3 * frames, g.points());
  for (int j = 0; j < g.points(); ++j) {
    const auto [r, c] = g.cell(j);
    s.col(j) = coeff.col(0) * c + coeff.col(1) * r + coeff.col(2);
  }
  return s;
}

}  // namespace

TEST_CASE("interior stencil is the eight-neighbour kernel") {
  const auto op = build_laplacian(GridTopology::full(3, 3));
  const Dense l = Dense(op.laplacian());
  CHECK(l(4, 4) == -8.0);
  for (int k = 0; k < 9; ++k) {
    if (k != 4) CHECK(l(4, k) == 1.0);
  }
}

TEST_CASE("single cell grid has a zero Laplacian") {
  const auto op = build_laplacian(GridTopology::full(1, 1));
  CHECK(Dense(op.laplacian()) == Dense::Zero(1, 1));
}

TEST_CASE("two by two grid rows") {
  const Dense l = Dense(build_laplacian(GridTopology::full(2, 2)).laplacian());
  for (int j = 0; j < 4; ++j) {
    CHECK(l(j, j) == -3.0);
    CHECK(l.row(j).sum() == 0.0);
    for (int k = 0; k < 4; ++k) {
      if (k != j) CHECK(l(j, k) == 1.0);
    }
  }
}

TEST_CASE("Laplacian matches the window-scan oracle on full and masked grids") {
  auto rng = make_rng(89);
  std::bernoulli_distribution keep(0.8);
  for (int trial = 0; trial < 8; ++trial) {
    const int rows = 1 + trial % 5, cols = 2 + trial;
    std::vector<bool> mask(rows * cols);
    for (auto&& m : mask) m = keep(rng);
    mask[0] = true;
    for (const auto& g : {GridTopology::full(rows, cols), GridTopology::from_mask(rows, cols, mask)}) {
      const auto op = build_laplacian(g);
      const Dense oracle = dense_laplacian(g);
      CHECK(Dense(op.laplacian()) == oracle);
      CHECK(oracle.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
      CHECK((oracle - oracle.transpose()).norm() == 0.0);
      const Eigen::VectorXd diag = (oracle.transpose() * oracle).diagonal();
      CHECK((op.normal_diagonal() - diag).norm() < 1e-12);
    }
  }
}

TEST_CASE("every row touches only the point and its present neighbours") {
  std::vector<bool> mask = {true, true, false, true, true, true, false, true, true};
  const auto g = GridTopology::from_mask(3, 3, mask);
  const auto op = build_laplacian(g);
  const auto& l = op.laplacian();
  for (int j = 0; j < g.points(); ++j) {
    const auto nb = g.neighbors(j);
    for (SparseMatrix::InnerIterator it(l, j); it; ++it) {
      const int k = static_cast<int>(it.col());
      CHECK((k == j || std::find(nb.begin(), nb.end(), k) != nb.end()));
    }
  }
}

TEST_CASE("constant shapes are annihilated exactly") {
  auto rng = make_rng(97);
  for (int n : {1, 2, 5, 20}) {
    const auto g = GridTopology::full(n, n);
    const auto op = build_laplacian(g);
    const Dense per_frame = random_matrix(6, 1, rng);
    const Dense s = per_frame.replicate(1, g.points());
    CHECK(apply_spatial(op, ShapeStack(s)).data().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("affine shapes vanish at interior points") {
  auto rng = make_rng(101);
  for (int n : {3, 8, 20}) {
    const auto g = GridTopology::full(n, n);
    const auto op = build_laplacian(g);
    const Dense out = apply_spatial(op, ShapeStack(affine_shape(g, 2, rng))).data();
    for (int j = 0; j < g.points(); ++j) {
      if (interior(g, j)) CHECK(out.col(j).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("apply_spatial matches the dense block-diagonal operator") {
  auto rng = make_rng(103);
  const auto g = GridTopology::full(4, 4);
  const auto op = build_laplacian(g);
  const Dense lap = dense_laplacian(g);
  const int f = 2, p = g.points();
  const Dense s = random_matrix(3 * f, p, rng);
  // A acts on vec(S) as L kron I_{3F}.
  Dense a = Dense::Zero(3 * f * p, 3 * f * p);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) a.block(3 * f * j, 3 * f * k, 3 * f, 3 * f) = lap(j, k) * Dense::Identity(3 * f, 3 * f);
  }
  const Dense oracle = unvec(a * vec(s), 3 * f, p);
  CHECK(rel_diff(apply_spatial(op, ShapeStack(s)).data(), oracle) < 1e-12);
  CHECK(rel_diff(op.apply_normal(s), unvec(a.transpose() * a * vec(s), 3 * f, p)) < 1e-12);
}

TEST_CASE("regularizer is invariant to per-frame translations") {
  auto rng = make_rng(107);
  const auto g = GridTopology::full(5, 6);
  const auto op = build_laplacian(g);
  const Dense s = random_matrix(9, g.points(), rng);
  const Dense shifted = s + random_matrix(9, 1, rng).replicate(1, g.points());
  CHECK(apply_spatial(op, ShapeStack(shifted)).data().norm() ==
        doctest::Approx(apply_spatial(op, ShapeStack(s)).data().norm()).epsilon(1e-12));
}

TEST_CASE("normal matrix is positive semidefinite with constants in its null space") {
  std::vector<bool> mask(25, true);
  mask[7] = mask[18] = false;
  for (const auto& g : {GridTopology::full(5, 5), GridTopology::from_mask(5, 5, mask)}) {
    const Dense lap = dense_laplacian(g);
    const Dense n = lap.transpose() * lap;
    CHECK((n - n.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Dense> eig(n);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
    CHECK(std::abs(eig.eigenvalues()(0)) < 1e-10);
    CHECK((n * Eigen::VectorXd::Ones(g.points())).norm() < 1e-12);
  }
}

TEST_CASE("apply_spatial rejects mismatched point counts") {
  const auto op = build_laplacian(GridTopology::full(2, 3));
  CHECK_THROWS_AS(apply_spatial(op, ShapeStack(Matrix::Zero(3, 5))), ShapeError);
}
