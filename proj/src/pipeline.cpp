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

#include "nrsfm/pipeline.hpp"

#include <string>

#include "nrsfm/temporal.hpp"

namespace nrsfm {

namespace {

ShapeStack restore_offsets(const ShapeStack& shape, const RotationStack& rotations,
                           const Vector& offsets) {
  Matrix out = shape.data();
  for (int i = 0; i < shape.frames(); ++i) {
    const Eigen::Vector3d lift = rotations.block(i).transpose() * offsets.segment<2>(2 * i);
    out.middleRows<3>(3 * i).colwise() += lift;
  }
  return ShapeStack(std::move(out));
}

Reconstruction solve_l2(const TrackMatrix& tracks, const RotationStack& rotations,
                        const GridTopology& topology, const SolverConfig& cfg) {
  const TemporalOperator temporal = build_temporal_operator(tracks.frames());
  const SpatialOperator spatial = build_laplacian(topology);
  const ShapeStack init = solve_temporal(tracks, rotations, cfg.lambda1);
  const IrlsWeights ones = IrlsWeights::uniform(tracks.frames(), tracks.points());
  SubproblemResult result =
      solve_quadratic_subproblem(tracks, rotations, ones, temporal, spatial, cfg, init);

  // The trace reports the quadratic objective for this method.
  auto l2_objective = [&](const ShapeStack& s) {
    const Matrix r = tracks.data() - rotations.apply(s.data());
    return r.squaredNorm() + cfg.lambda1 * temporal.apply(s.data()).squaredNorm() +
           cfg.lambda2 * spatial.apply(s.data()).squaredNorm();
  };
  SolveReport report;
  report.objective_trace = {l2_objective(init), l2_objective(result.shape)};
  report.cg_iterations = {result.iterations};
  report.converged = result.converged;
  report.subproblems_converged = result.converged;
  report.final_objective = report.objective_trace.back();
  return {std::move(result.shape), std::move(report)};
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kPseudoInverse: return "pinv";
    case Method::kTemporal: return "temporal";
    case Method::kSpatialTemporalL2: return "st-l2";
    case Method::kSpatialTemporalL1: return "st-l1";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "pinv") return Method::kPseudoInverse;
  if (name == "temporal") return Method::kTemporal;
  if (name == "st-l2") return Method::kSpatialTemporalL2;
  if (name == "st-l1") return Method::kSpatialTemporalL1;
  throw DataValidationError("unknown method '" + std::string(name) +
                            "' (expected pinv, temporal, st-l2 or st-l1)");
}

Reconstruction reconstruct(Method method, const TrackMatrix& tracks,
                           const RotationStack& rotations, const GridTopology& topology,
                           const SolverConfig& cfg) {
  cfg.validate();
  if (topology.points() != tracks.points()) {
    throw ShapeError("topology has " + std::to_string(topology.points()) +
                     " points but tracks have " + std::to_string(tracks.points()));
  }
  const CenteredTracks centered = center_tracks(tracks);
  Reconstruction out;
  switch (method) {
    case Method::kPseudoInverse:
      out.shape = solve_pseudo_inverse(centered.tracks, rotations);
      break;
    case Method::kTemporal:
      out.shape = solve_temporal(centered.tracks, rotations, cfg.lambda1);
      break;
    case Method::kSpatialTemporalL2:
      out = solve_l2(centered.tracks, rotations, topology, cfg);
      break;
    case Method::kSpatialTemporalL1: {
      // delta follows the centered tracks unless pinned explicitly.
      auto [shape, report] = irls_reconstruct(centered.tracks, rotations, topology, cfg);
      out.shape = std::move(shape);
      out.report = std::move(report);
      break;
    }
  }
  out.shape = restore_offsets(out.shape, rotations, centered.offsets);
  return out;
}

}  // namespace nrsfm
