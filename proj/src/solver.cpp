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

#include "nrsfm/solver.hpp"

#include <cmath>
#include <string>

#include "nrsfm/block_tridiagonal.hpp"

namespace nrsfm {

namespace {

void check_problem(const TrackMatrix& tracks, const RotationStack& rotations,
                   const ShapeStack& shape, const TemporalOperator& temporal,
                   const SpatialOperator& spatial) {
  if (tracks.frames() != rotations.frames() || shape.frames() != tracks.frames() ||
      temporal.frames() != tracks.frames()) {
    throw ShapeError("frame counts disagree: tracks " + std::to_string(tracks.frames()) +
                     ", cameras " + std::to_string(rotations.frames()) + ", shape " +
                     std::to_string(shape.frames()) + ", temporal operator " +
                     std::to_string(temporal.frames()));
  }
  if (tracks.points() != shape.points() || spatial.points() != shape.points()) {
    throw ShapeError("point counts disagree: tracks " + std::to_string(tracks.points()) +
                     ", shape " + std::to_string(shape.points()) + ", topology " +
                     std::to_string(spatial.points()));
  }
}

// Q(S) = R^T (E^2 .* R S) + lambda1 H^T H S + lambda2 S L^T L, with right-hand
// side b = R^T (E^2 .* W). The gradient of the weighted quadratic is 2 (Q S - b).
class NormalOperator {
 public:
  NormalOperator(const RotationStack& rotations, const Matrix& weights_sq,
                 const TemporalOperator& temporal, const SpatialOperator& spatial,
                 double lambda1, double lambda2)
      : rotations_(rotations),
        weights_sq_(weights_sq),
        temporal_(temporal),
        spatial_(spatial),
        lambda1_(lambda1),
        lambda2_(lambda2) {}

  Matrix apply(const Matrix& s) const {
    Matrix out;
    apply_into(s, out);
    return out;
  }

  // Writes Q(s) into out, which must not alias s.
  void apply_into(const Matrix& s, Matrix& out) const {
    out.resize(s.rows(), s.cols());
    for (int i = 0; i < rotations_.frames(); ++i) {
      const CameraBlock& r = rotations_.block(i);
      out.middleRows<3>(3 * i).noalias() =
          r.transpose() *
          weights_sq_.middleRows<2>(2 * i).cwiseProduct(r * s.middleRows<3>(3 * i));
    }
    if (lambda1_ != 0.0) temporal_.add_normal(s, lambda1_, out);
    if (lambda2_ != 0.0) {
      spatial_.apply_into(s, filtered_);
      spatial_.apply_into(filtered_, filtered_twice_);
      out.noalias() += lambda2_ * filtered_twice_;
    }
  }

  Matrix rhs(const Matrix& tracks) const {
    return rotations_.apply_transpose(weights_sq_.cwiseProduct(tracks));
  }

 private:
  const RotationStack& rotations_;
  const Matrix& weights_sq_;
  const TemporalOperator& temporal_;
  const SpatialOperator& spatial_;
  double lambda1_;
  double lambda2_;
  mutable Matrix filtered_;
  mutable Matrix filtered_twice_;
};

// Per-point exact inverse of the data + temporal coupling, with the spatial
// term reduced to its diagonal. Each point owns one block-tridiagonal system
// over frames.
class PointBlockPreconditioner {
 public:
  PointBlockPreconditioner(const RotationStack& rotations, const Matrix& weights_sq,
                           const TemporalOperator& temporal, const SpatialOperator& spatial,
                           double lambda1, double lambda2) {
    const int frames = rotations.frames();
    const int points = static_cast<int>(weights_sq.cols());
    factors_.reserve(points);
    fallback_.resize(points);
    std::vector<Eigen::Matrix3d> diagonal(frames);
    const std::vector<Eigen::Matrix3d> upper(frames - 1,
                                             -lambda1 * Eigen::Matrix3d::Identity());
    for (int j = 0; j < points; ++j) {
      const double spatial_diag = lambda2 * spatial.normal_diagonal()(j);
      double trace = 0.0;
      for (int i = 0; i < frames; ++i) {
        const CameraBlock& r = rotations.block(i);
        const Eigen::Vector2d w = weights_sq.block<2, 1>(2 * i, j);
        diagonal[i] = r.transpose() * w.asDiagonal() * r +
                      (lambda1 * temporal.degree(i) + spatial_diag) *
                          Eigen::Matrix3d::Identity();
        trace += diagonal[i].trace();
      }
      factors_.push_back(BlockTridiagonalCholesky::factor(diagonal, upper));
      fallback_[j] = trace > 0.0 ? 3.0 * frames / trace : 1.0;
    }
  }

  void apply_in_place(Matrix& r) const {
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      if (factors_[j]) {
        factors_[j]->solve_in_place(r.col(j));
      } else {
        r.col(j) *= fallback_[j];
      }
    }
  }

 private:
  std::vector<std::optional<BlockTridiagonalCholesky>> factors_;
  Vector fallback_;
};

double dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

SubproblemResult conjugate_gradient(const NormalOperator& q,
                                    const PointBlockPreconditioner& precond, const Matrix& b,
                                    Matrix x, const SolverConfig& cfg) {
  const double b_norm = b.norm();
  SubproblemResult result;
  if (b_norm == 0.0) {
    // Q is positive definite on any admissible problem, so the minimizer is 0.
    result.shape = ShapeStack(Matrix::Zero(x.rows(), x.cols()));
    result.converged = true;
    return result;
  }

  Matrix r = b - q.apply(x);
  double rel = r.norm() / b_norm;
  Matrix best = x;
  double best_rel = rel;
  double restart_rel = rel;
  int it = 0;
  Matrix z, p, qp;
  while (rel > cfg.cg_tol && it < cfg.cg_max_iters) {
    z = r;
    precond.apply_in_place(z);
    p = z;
    double rz = dot(r, z);
    while (it < cfg.cg_max_iters) {
      ++it;
      q.apply_into(p, qp);
      const double pqp = dot(p, qp);
      if (!(pqp > 0.0)) break;
      const double alpha = rz / pqp;
      x.noalias() += alpha * p;
      r.noalias() -= alpha * qp;
      rel = r.norm() / b_norm;
      if (rel < best_rel) {
        best_rel = rel;
        best = x;
      }
      if (rel <= cfg.cg_tol) break;
      z = r;
      precond.apply_in_place(z);
      const double rz_next = dot(r, z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    // The recursive residual drifts; confirm with the true one and restart
    // from there if it is still above tolerance.
    q.apply_into(x, qp);
    r = b - qp;
    rel = r.norm() / b_norm;
    if (rel < best_rel) {
      best_rel = rel;
      best = x;
    }
    if (rel >= restart_rel) break;
    restart_rel = rel;
  }
  if (rel <= cfg.cg_tol) {
    result.shape = ShapeStack(std::move(x));
    result.relative_residual = rel;
    result.converged = true;
  } else {
    result.shape = ShapeStack(std::move(best));
    result.relative_residual = best_rel;
    result.converged = false;
  }
  result.iterations = it;
  return result;
}

SubproblemResult gradient_descent(const NormalOperator& q, const Matrix& b, Matrix x,
                                  const SolverConfig& cfg) {
  const double b_norm = b.norm();
  SubproblemResult result;
  if (b_norm == 0.0) {
    result.shape = ShapeStack(Matrix::Zero(x.rows(), x.cols()));
    result.converged = true;
    return result;
  }
  Matrix r = b - q.apply(x);
  double rel = r.norm() / b_norm;
  int it = 0;
  Matrix qr;
  while (rel > cfg.cg_tol && it < cfg.cg_max_iters) {
    ++it;
    q.apply_into(r, qr);
    const double rqr = dot(r, qr);
    if (!(rqr > 0.0)) break;
    const double step = dot(r, r) / rqr;
    x.noalias() += step * r;
    r.noalias() -= step * qr;
    rel = r.norm() / b_norm;
  }
  result.iterations = it;
  result.relative_residual = rel;
  result.converged = rel <= cfg.cg_tol;
  result.shape = ShapeStack(std::move(x));
  return result;
}

}  // namespace

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw DataValidationError("solver config: " + what); };
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) fail("lambda1 must be finite and >= 0");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) fail("lambda2 must be finite and >= 0");
  if (delta && !(*delta > 0.0)) fail("delta must be > 0");
  if (irls_max_iters < 0) fail("irls_max_iters must be >= 0");
  if (cg_max_iters < 0) fail("cg_max_iters must be >= 0");
  if (!(cg_tol > 0.0)) fail("cg_tol must be > 0");
  if (!(objective_tol > 0.0)) fail("objective_tol must be > 0");
}

double resolve_delta(const SolverConfig& cfg, const TrackMatrix& tracks) {
  if (cfg.delta) return *cfg.delta;
  const double scale = tracks.max_abs();
  // All-zero tracks still need a positive smoothing constant.
  return scale > 0.0 ? kDefaultDeltaRatio * scale : kDefaultDeltaRatio;
}

IrlsWeights IrlsWeights::uniform(int frames, int points) {
  return {Matrix::Ones(2 * frames, points)};
}

double robust_objective(const TrackMatrix& tracks, const RotationStack& rotations,
                        const ShapeStack& shape, const TemporalOperator& temporal,
                        const SpatialOperator& spatial, const SolverConfig& cfg) {
  check_problem(tracks, rotations, shape, temporal, spatial);
  const double delta = resolve_delta(cfg, tracks);
  const Matrix residual = tracks.data() - rotations.apply(shape.data());
  const double data = (residual.array().square() + delta * delta).sqrt().sum();
  double value = data;
  if (cfg.lambda1 != 0.0) value += cfg.lambda1 * temporal.apply(shape.data()).squaredNorm();
  if (cfg.lambda2 != 0.0) value += cfg.lambda2 * spatial.apply(shape.data()).squaredNorm();
  return value;
}

IrlsWeights update_weights(const Matrix& residual, double delta) {
  if (!(delta > 0.0)) throw DataValidationError("IRLS smoothing delta must be > 0");
  return {(residual.array().square() + delta * delta).pow(-0.25).matrix()};
}

ShapeStack gradient(const ShapeStack& shape, const TrackMatrix& tracks,
                    const RotationStack& rotations, const IrlsWeights& weights,
                    const TemporalOperator& temporal, const SpatialOperator& spatial,
                    const SolverConfig& cfg) {
  check_problem(tracks, rotations, shape, temporal, spatial);
  if (weights.values.rows() != tracks.data().rows() ||
      weights.values.cols() != tracks.data().cols()) {
    throw ShapeError("IRLS weights must be aligned with the track matrix");
  }
  const Matrix weights_sq = weights.values.cwiseAbs2();
  const NormalOperator q(rotations, weights_sq, temporal, spatial, cfg.lambda1, cfg.lambda2);
  return ShapeStack(2.0 * (q.apply(shape.data()) - q.rhs(tracks.data())));
}

SubproblemResult solve_quadratic_subproblem(const TrackMatrix& tracks,
                                            const RotationStack& rotations,
                                            const IrlsWeights& weights,
                                            const TemporalOperator& temporal,
                                            const SpatialOperator& spatial,
                                            const SolverConfig& cfg,
                                            const ShapeStack& shape_init) {
  cfg.validate();
  check_problem(tracks, rotations, shape_init, temporal, spatial);
  if (weights.values.rows() != tracks.data().rows() ||
      weights.values.cols() != tracks.data().cols()) {
    throw ShapeError("IRLS weights must be aligned with the track matrix");
  }
  if (!weights.values.allFinite() || (weights.values.array() <= 0.0).any()) {
    throw DataValidationError("IRLS weights must be positive and finite");
  }
  const Matrix weights_sq = weights.values.cwiseAbs2();
  const NormalOperator q(rotations, weights_sq, temporal, spatial, cfg.lambda1, cfg.lambda2);
  const Matrix b = q.rhs(tracks.data());
  if (cfg.inner_solver == InnerSolver::kGradientDescent) {
    return gradient_descent(q, b, shape_init.data(), cfg);
  }
  const PointBlockPreconditioner precond(rotations, weights_sq, temporal, spatial,
                                         cfg.lambda1, cfg.lambda2);
  return conjugate_gradient(q, precond, b, shape_init.data(), cfg);
}

std::pair<ShapeStack, SolveReport> irls_reconstruct(const TrackMatrix& tracks,
                                                    const RotationStack& rotations,
                                                    const GridTopology& topology,
                                                    const SolverConfig& cfg,
                                                    const std::optional<ShapeStack>& shape_init) {
  cfg.validate();
  const TemporalOperator temporal = build_temporal_operator(tracks.frames());
  const SpatialOperator spatial = build_laplacian(topology);

  SolverConfig resolved = cfg;
  resolved.delta = resolve_delta(cfg, tracks);

  // With fixed E, sqrt(r^2 + d^2) <= const + r^2 E^2 / 2, so the majorizer of
  // the robust objective is half the weighted quadratic with doubled
  // regularization weights.
  SolverConfig sub = resolved;
  sub.lambda1 = 2.0 * cfg.lambda1;
  sub.lambda2 = 2.0 * cfg.lambda2;

  ShapeStack shape = shape_init ? *shape_init : solve_temporal(tracks, rotations, cfg.lambda1);
  check_problem(tracks, rotations, shape, temporal, spatial);

  SolveReport report;
  report.delta = *resolved.delta;
  double objective = robust_objective(tracks, rotations, shape, temporal, spatial, resolved);
  report.objective_trace.push_back(objective);

  for (int it = 0; it < cfg.irls_max_iters; ++it) {
    const Matrix residual = tracks.data() - rotations.apply(shape.data());
    const IrlsWeights weights = update_weights(residual, *resolved.delta);
    SubproblemResult step =
        solve_quadratic_subproblem(tracks, rotations, weights, temporal, spatial, sub, shape);
    report.cg_iterations.push_back(step.iterations);
    report.subproblems_converged = report.subproblems_converged && step.converged;

    const double next =
        robust_objective(tracks, rotations, step.shape, temporal, spatial, resolved);
    if (next > objective) {
      // Only reachable through rounding or an unconverged inner solve; keep
      // the previous iterate so the trace stays monotone.
      report.converged = true;
      break;
    }
    const double decrease = objective - next;
    shape = std::move(step.shape);
    objective = next;
    report.objective_trace.push_back(objective);
    if (decrease <= cfg.objective_tol * std::abs(report.objective_trace[it])) {
      report.converged = true;
      break;
    }
  }
  report.final_objective = objective;
  return {std::move(shape), std::move(report)};
}

}  // namespace nrsfm
