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
#include <string_view>

#include "nrsfm/model.hpp"
#include "nrsfm/solver.hpp"

namespace nrsfm {

// The four solvers of the reconstruction ladder.
enum class Method {
  kPseudoInverse,            // R^+ W
  kTemporal,                 // closed form, lambda1 only
  kSpatialTemporalL2,        // weighted quadratic with E = 1
  kSpatialTemporalL1,        // IRLS on the smoothed L1 objective
};

std::string_view method_name(Method method);
// Accepts "pinv", "temporal", "st-l2" and "st-l1".
Method parse_method(std::string_view name);

struct Reconstruction {
  ShapeStack shape;
  // Present for the iterative methods.
  std::optional<SolveReport> report;
};

// Centers the tracks per row, solves with the chosen method, then lifts the
// removed image offsets back into 3D (S_i += R_i^T t_i) so the result
// reprojects onto the original tracks.
Reconstruction reconstruct(Method method, const TrackMatrix& tracks,
                           const RotationStack& rotations, const GridTopology& topology,
                           const SolverConfig& cfg);

}  // namespace nrsfm
