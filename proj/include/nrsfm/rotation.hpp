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
#include <span>
#include <vector>

#include "nrsfm/model.hpp"

namespace nrsfm {

enum class RotationMode { kProvided, kEstimated };

struct RotationSource {
  RotationMode mode = RotationMode::kProvided;
  RotationStack stack;
  // Per-frame distance to orthonormality before projection, max_k |sigma_k - 1|.
  std::vector<double> residuals;
  // Rigid 3 x P shape recovered alongside estimated cameras.
  std::optional<Matrix> rigid_shape;
};

// Nearest row-orthonormal 2x3 matrix in Frobenius norm.
CameraBlock project_to_orthonormal(const CameraBlock& block, int frame = 0);

// Projects each block to the nearest row-orthonormal matrix. Blocks whose
// second singular value is below 1e-6 are rejected.
RotationSource validate_rotations(std::span<const CameraBlock> blocks);

// Rigid rank-3 factorization with an orthographic metric upgrade. The first
// camera is fixed to [I | 0] to remove the global rotation ambiguity. Tracks
// are centered per row before factorization.
RotationSource estimate_rigid_rotations(const TrackMatrix& tracks);

}  // namespace nrsfm
