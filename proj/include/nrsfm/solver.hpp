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
#include <utility>
#include <vector>

#include "nrsfm/model.hpp"
#include "nrsfm/spatial.hpp"
#include "nrsfm/temporal.hpp"

namespace nrsfm {

enum class InnerSolver {
  kConjugateGradient,  // block-preconditioned CG on the normal equations
  kGradientDescent,    // steepest descent with exact line search
};

struct SolverConfig {
  double lambda1 = 1e-3;  // temporal weight
  double lambda2 = 1.0;   // spatial weight
  // Smoothing of the L1 data term in track units. Unset means
  // 1e-4 * max|W| of the tracks being solved.
  std::optional<double> delta;
  int irls_max_iters = 30;
  int cg_max_iters = 500;
  double cg_tol = 1e-8;
  double objective_tol = 1e-6;
  InnerSolver inner_solver = InnerSolver::kConjugateGradient;

  // Throws DataValidationError on negative weights or non-positive tolerances.
  void validate() const;
};

inline constexpr double kDefaultDeltaRatio = 1e-4;

double resolve_delta(const SolverConfig& cfg, const TrackMatrix& tracks);

// Diagonal of the IRLS weighting E, stored aligned with W (2F x P).
struct IrlsWeights {
  Matrix values;

  static IrlsWeights uniform(int frames, int points);
};

struct SubproblemResult {
  ShapeStack shape;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

struct SolveReport {
  std::vector<double> objective_trace;  // entry 0 is the initial iterate
  std::vector<int> cg_iterations;       // one per outer iteration
  bool converged = false;               // objective_tol reached
  bool subproblems_converged = true;    // every inner solve met cg_tol
  double final_objective = 0.0;
  double delta = 0.0;
};

// sum sqrt(r^2 + delta^2) + lambda1 ||H S||^2 + lambda2 ||A vec(S)||^2, r = W - R S.
double robust_objective(const TrackMatrix& tracks, const RotationStack& rotations,
                        const ShapeStack& shape, const TemporalOperator& temporal,
                        const SpatialOperator& spatial, const SolverConfig& cfg);

// E_ij = (r_ij^2 + delta^2)^(-1/4).
IrlsWeights update_weights(const Matrix& residual, double delta);

// Gradient of ||E (W - R S)||^2 + lambda1 ||H S||^2 + lambda2 ||A vec(S)||^2.
ShapeStack gradient(const ShapeStack& shape, const TrackMatrix& tracks,
                    const RotationStack& rotations, const IrlsWeights& weights,
                    const TemporalOperator& temporal, const SpatialOperator& spatial,
                    const SolverConfig& cfg);

// Minimizes the weighted quadratic above, warm-started at shape_init. Stops
// when ||g(S)|| / ||2 R^T E^2 W|| <= cfg.cg_tol; on budget exhaustion the
// best iterate is returned with converged = false.
SubproblemResult solve_quadratic_subproblem(const TrackMatrix& tracks,
                                            const RotationStack& rotations,
                                            const IrlsWeights& weights,
                                            const TemporalOperator& temporal,
                                            const SpatialOperator& spatial,
                                            const SolverConfig& cfg,
                                            const ShapeStack& shape_init);

// Robust spatial-temporal reconstruction. Starts from solve_temporal(W, R,
// lambda1) unless shape_init is given.
std::pair<ShapeStack, SolveReport> irls_reconstruct(
    const TrackMatrix& tracks, const RotationStack& rotations, const GridTopology& topology,
    const SolverConfig& cfg, const std::optional<ShapeStack>& shape_init = std::nullopt);

}  // namespace nrsfm
