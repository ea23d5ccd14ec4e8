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

#include "nrsfm/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

namespace nrsfm {

void SceneSpec::validate() const {
  auto fail = [](const std::string& what) { throw DataValidationError("scene spec: " + what); };
  if (rows < 1 || cols < 1) fail("grid must be at least 1x1");
  if (frames < 1) fail("frames must be >= 1");
  if (basis_rank < 1) fail("basis_rank must be >= 1");
  if (!(amplitude >= 0.0)) fail("amplitude must be >= 0");
  if (!(min_spatial_frequency >= 0.0) || max_spatial_frequency < min_spatial_frequency) {
    fail("invalid spatial frequency band");
  }
  if (!(min_temporal_cycles >= 0.0) || max_temporal_cycles < min_temporal_cycles) {
    fail("invalid temporal frequency band");
  }
  if (!(pixel_scale > 0.0)) fail("pixel_scale must be > 0");
  if (!(in_plane_weight >= 0.0) || !(depth_weight >= 0.0) ||
      in_plane_weight + depth_weight == 0.0) {
    fail("mode direction weights must be >= 0 and not both zero");
  }
  if (!(rotation_axis.norm() > 0.0)) fail("rotation axis must be non-zero");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  constexpr double kPi = std::numbers::pi;

  const GridTopology topology = GridTopology::full(spec.rows, spec.cols);
  const int points = topology.points();
  const int span = std::max(spec.rows, spec.cols) - 1;
  const double spacing = span > 0 ? 2.0 * spec.pixel_scale / span : 0.0;

  Matrix base(3, points);
  for (int j = 0; j < points; ++j) {
    const auto [r, c] = topology.cell(j);
    base(0, j) = (c - 0.5 * (spec.cols - 1)) * spacing;
    base(1, j) = (r - 0.5 * (spec.rows - 1)) * spacing;
    base(2, j) = 0.0;
  }

  std::vector<Matrix> modes;
  std::vector<double> omega;
  std::vector<double> phase;
  for (int k = 0; k < spec.basis_rank; ++k) {
    const double fx = uniform(spec.min_spatial_frequency, spec.max_spatial_frequency);
    const double fy = uniform(spec.min_spatial_frequency, spec.max_spatial_frequency);
    const double px = uniform(0.0, 2.0 * kPi);
    const double py = uniform(0.0, 2.0 * kPi);
    Eigen::Vector3d dir;
    do {
      dir = Eigen::Vector3d(spec.in_plane_weight * gauss(rng), spec.in_plane_weight * gauss(rng),
                            spec.depth_weight * gauss(rng));
    } while (!(dir.norm() > 1e-12));
    dir.normalize();
    Matrix mode(3, points);
    for (int j = 0; j < points; ++j) {
      const double profile = std::cos(kPi * fx * base(0, j) / spec.pixel_scale + px) *
                             std::cos(kPi * fy * base(1, j) / spec.pixel_scale + py);
      mode.col(j) = dir * (spec.pixel_scale * profile);
    }
    modes.push_back(std::move(mode));
    const double cycles = uniform(spec.min_temporal_cycles, spec.max_temporal_cycles);
    omega.push_back(2.0 * kPi * cycles / spec.frames);
    phase.push_back(uniform(0.0, 2.0 * kPi));
  }

  const Eigen::Vector3d axis = spec.rotation_axis.normalized();
  std::vector<CameraBlock> blocks(spec.frames);
  Matrix shape(3 * spec.frames, points);
  for (int i = 0; i < spec.frames; ++i) {
    Matrix frame = base;
    for (int k = 0; k < spec.basis_rank; ++k) {
      frame += spec.amplitude * std::sin(omega[k] * i + phase[k]) * modes[k];
    }
    shape.middleRows<3>(3 * i) = frame;
    const double angle = spec.rotation_step * (i - 0.5 * (spec.frames - 1));
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    blocks[i] = rot.topRows<2>();
  }

  Scene scene;
  scene.spec = spec;
  scene.rotations = assemble_rotation(blocks);
  scene.ground_truth = ShapeStack(std::move(shape));
  scene.tracks = reproject(scene.rotations, scene.ground_truth);
  scene.topology = topology;
  return scene;
}

TrackMatrix inject_noise(const TrackMatrix& tracks, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0)) throw DataValidationError("noise ratio must be >= 0");
  if (ratio == 0.0) return tracks;
  const double sigma = ratio * tracks.max_abs();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  Matrix noisy = tracks.data();
  for (Eigen::Index c = 0; c < noisy.cols(); ++c) {
    for (Eigen::Index r = 0; r < noisy.rows(); ++r) noisy(r, c) += gauss(rng);
  }
  return TrackMatrix(std::move(noisy));
}

long outlier_count(double ratio, int frames, int points) {
  // Guard so that e.g. 0.07 * 100 counts 7 despite binary rounding.
  const double total = static_cast<double>(frames) * points;
  return static_cast<long>(std::floor(ratio * total + 1e-9));
}

ContaminatedTracks inject_outliers(const TrackMatrix& tracks, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw DataValidationError("outlier ratio must lie in [0, 1]");
  }
  const int frames = tracks.frames();
  const int points = tracks.points();
  ContaminatedTracks out{tracks, OutlierMask::Constant(frames, points, false)};
  const long count = outlier_count(ratio, frames, points);
  if (count == 0) return out;

  const double lo = tracks.data().minCoeff();
  const double hi = tracks.data().maxCoeff();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(lo, hi);

  // Partial Fisher-Yates over the F * P observation slots.
  const long total = static_cast<long>(frames) * points;
  std::vector<long> slots(total);
  for (long s = 0; s < total; ++s) slots[s] = s;
  Matrix data = tracks.data();
  for (long s = 0; s < count; ++s) {
    std::uniform_int_distribution<long> pick(s, total - 1);
    std::swap(slots[s], slots[pick(rng)]);
    const int frame = static_cast<int>(slots[s] / points);
    const int point = static_cast<int>(slots[s] % points);
    out.mask(frame, point) = true;
    data(2 * frame, point) = value(rng);
    data(2 * frame + 1, point) = value(rng);
  }
  out.tracks = TrackMatrix(std::move(data));
  return out;
}

}  // namespace nrsfm
