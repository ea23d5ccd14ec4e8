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

// Dense reference constructions shared by the unit tests. Everything here is
// assembled explicitly from definitions so it can serve as an oracle for the
// structured, matrix-free library code.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "nrsfm/model.hpp"

namespace nrsfm::testing {

using Dense = Eigen::MatrixXd;

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Dense random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                           double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Dense m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  }
  return m;
}

inline CameraBlock random_camera(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix().topRows<2>();
}

inline std::vector<CameraBlock> random_cameras(int frames, std::mt19937_64& rng) {
  std::vector<CameraBlock> blocks;
  for (int i = 0; i < frames; ++i) blocks.push_back(random_camera(rng));
  return blocks;
}

inline Dense dense_rotation(const std::vector<CameraBlock>& blocks) {
  const auto f = static_cast<Eigen::Index>(blocks.size());
  Dense r = Dense::Zero(2 * f, 3 * f);
  for (Eigen::Index i = 0; i < f; ++i) r.block(2 * i, 3 * i, 2, 3) = blocks[i];
  return r;
}

// First-order difference operator written entry by entry.
inline Dense dense_temporal(int frames) {
  Dense h = Dense::Zero(3 * (frames - 1), 3 * frames);
  for (int i = 0; i < 3 * (frames - 1); ++i) {
    h(i, i) = 1.0;
    h(i, i + 3) = -1.0;
  }
  return h;
}

// Laplacian from an explicit scan of the 3x3 window around every present cell.
inline Dense dense_laplacian(const GridTopology& topo) {
  const int p = topo.points();
  Dense l = Dense::Zero(p, p);
  for (int r = 0; r < topo.rows(); ++r) {
    for (int c = 0; c < topo.cols(); ++c) {
      const int j = topo.index(r, c);
      if (j < 0) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= topo.rows() || cc >= topo.cols()) continue;
          const int k = topo.index(rr, cc);
          if (k < 0) continue;
          l(j, k) += 1.0;
          l(j, j) -= 1.0;
        }
      }
    }
  }
  return l;
}

inline Dense vec(const Dense& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

inline Dense unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Dense>(v.data(), rows, cols);
}

// Minimizer of ||E o (W - R S)||^2 + l1 ||H S||^2 + l2 ||S L^T||^2 over vec(S),
// assembled as one 3FP x 3FP system with Kronecker products.
inline Dense dense_weighted_solve(const Dense& w, const Dense& r, const Dense& e, double l1,
                                  double l2, const Dense& lap) {
  const Eigen::Index f3 = r.cols();
  const Eigen::Index p = w.cols();
  const Eigen::Index n = f3 * p;
  const Eigen::VectorXd e2 = vec(e.cwiseAbs2());
  Dense big_r = Dense::Zero(w.size(), n);
  for (Eigen::Index j = 0; j < p; ++j) big_r.block(j * w.rows(), j * f3, w.rows(), f3) = r;
  const Dense h = dense_temporal(static_cast<int>(f3 / 3));
  Dense big_h = Dense::Zero(h.rows() * p, n);
  for (Eigen::Index j = 0; j < p; ++j) big_h.block(j * h.rows(), j * f3, h.rows(), f3) = h;
  // vec(S L^T) = (L kron I) vec(S)
  Dense big_a = Dense::Zero(n, n);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) {
      if (lap(a, b) != 0.0) big_a.block(a * f3, b * f3, f3, f3) = lap(a, b) * Dense::Identity(f3, f3);
    }
  }
  const Dense m = big_r.transpose() * e2.asDiagonal() * big_r + l1 * big_h.transpose() * big_h +
                  l2 * big_a.transpose() * big_a;
  const Eigen::VectorXd rhs = big_r.transpose() * e2.asDiagonal() * vec(w);
  const Eigen::VectorXd x = m.fullPivLu().solve(rhs);
  return unvec(x, f3, p);
}

inline double rel_diff(const Dense& a, const Dense& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

inline int numeric_rank(const Dense& m, double rel = 1e-8) {
  Eigen::JacobiSVD<Dense> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) rank += s(k) > rel * s(0) ? 1 : 0;
  return rank;
}

}  // namespace nrsfm::testing
