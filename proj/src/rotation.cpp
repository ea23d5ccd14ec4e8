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

#include "nrsfm/rotation.hpp"

#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace nrsfm {

namespace {

constexpr double kDegenerateSingularValue = 1e-6;
constexpr double kRankTolerance = 1e-8;

double orthonormality_residual(const CameraBlock& block) {
  Eigen::JacobiSVD<CameraBlock> svd(block);
  return (svd.singularValues().array() - 1.0).abs().maxCoeff();
}

// Coefficients of x^T G y in the symmetric parameterization
// (g11, g12, g13, g22, g23, g33).
Eigen::Matrix<double, 1, 6> gram_row(const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
  Eigen::Matrix<double, 1, 6> row;
  row << x(0) * y(0), x(0) * y(1) + x(1) * y(0), x(0) * y(2) + x(2) * y(0), x(1) * y(1),
      x(1) * y(2) + x(2) * y(1), x(2) * y(2);
  return row;
}

}  // namespace

CameraBlock project_to_orthonormal(const CameraBlock& block, int frame) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(block),
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (!(svd.singularValues()(1) >= kDegenerateSingularValue)) {
    throw DegenerateRotationError(frame, "camera block " + std::to_string(frame) +
                                             " is rank deficient (second singular value " +
                                             std::to_string(svd.singularValues()(1)) + ")");
  }
  return CameraBlock(svd.matrixU() * svd.matrixV().transpose());
}

RotationSource validate_rotations(std::span<const CameraBlock> blocks) {
  if (blocks.empty()) throw ShapeError("no camera blocks given");
  RotationSource source;
  source.mode = RotationMode::kProvided;
  std::vector<CameraBlock> projected;
  projected.reserve(blocks.size());
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (!blocks[i].allFinite()) {
      throw DegenerateRotationError(static_cast<int>(i),
                                    "camera block " + std::to_string(i) + " is not finite");
    }
    projected.push_back(project_to_orthonormal(blocks[i], static_cast<int>(i)));
    source.residuals.push_back(orthonormality_residual(blocks[i]));
  }
  source.stack = assemble_rotation(projected);
  return source;
}

RotationSource estimate_rigid_rotations(const TrackMatrix& tracks) {
  const int frames = tracks.frames();
  if (frames < 3 || tracks.points() < 4) {
    throw ShapeError("rigid factorization needs F >= 3 and P >= 4");
  }
  const Matrix w = center_tracks(tracks).tracks.data();

  Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (!(sigma(2) > kRankTolerance * sigma(0))) {
    throw DegenerateMotionError("track matrix has effective rank < 3; camera motion is "
                                "insufficient for factorization");
  }
  const Eigen::Vector3d root = sigma.head<3>().cwiseSqrt();
  const Matrix motion = svd.matrixU().leftCols<3>() * root.asDiagonal();

  // Metric upgrade: find G = Q Q^T with m_u^T G m_u = m_v^T G m_v = 1 and
  // m_u^T G m_v = 0 for every frame.
  Eigen::Matrix<double, Eigen::Dynamic, 6> a(3 * frames, 6);
  Vector rhs(3 * frames);
  for (int i = 0; i < frames; ++i) {
    const Eigen::Vector3d mu = motion.row(2 * i).transpose();
    const Eigen::Vector3d mv = motion.row(2 * i + 1).transpose();
    a.row(3 * i) = gram_row(mu, mu);
    a.row(3 * i + 1) = gram_row(mv, mv);
    a.row(3 * i + 2) = gram_row(mu, mv);
    rhs.segment<3>(3 * i) << 1.0, 1.0, 0.0;
  }
  const Eigen::Matrix<double, 6, 1> g = a.colPivHouseholderQr().solve(rhs);
  Eigen::Matrix3d gram;
  gram << g(0), g(1), g(2), g(1), g(3), g(4), g(2), g(4), g(5);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
  if (!(eig.eigenvalues()(0) > 0.0)) {
    throw EstimationFailureError(
        "metric upgrade produced a Gram matrix that is not positive definite; the tracks "
        "are too non-rigid for rigid factorization, provide rotations instead");
  }
  const Eigen::Matrix3d q = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal();

  RotationSource source;
  source.mode = RotationMode::kEstimated;
  std::vector<CameraBlock> blocks(frames);
  for (int i = 0; i < frames; ++i) {
    const CameraBlock upgraded = motion.middleRows<2>(2 * i) * q;
    source.residuals.push_back(orthonormality_residual(upgraded));
    blocks[i] = project_to_orthonormal(upgraded, i);
  }

  // Fix the gauge: rotate so that the first camera is [I | 0].
  Eigen::Matrix3d first;
  first.topRows<2>() = blocks[0];
  first.row(2) = blocks[0].row(0).cross(blocks[0].row(1));
  for (auto& b : blocks) b = b * first.transpose();

  source.stack = assemble_rotation(blocks);

  // Least-squares rigid shape for the final cameras: sum R_i^T R_i X = sum R_i^T W_i.
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  for (const auto& b : blocks) normal += b.transpose() * b;
  const Matrix projected = source.stack.apply_transpose(w);
  Matrix summed = Matrix::Zero(3, w.cols());
  for (int i = 0; i < frames; ++i) summed += projected.middleRows<3>(3 * i);
  source.rigid_shape = normal.ldlt().solve(summed);
  return source;
}

}  // namespace nrsfm
