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

#include <cstdint>

#include <Eigen/Core>

#include "nrsfm/model.hpp"

namespace nrsfm {

// Parameters of a synthetic deforming surface viewed by a rotating
// orthographic camera. The surface is a planar grid spanning
// [-pixel_scale, pixel_scale] along its longer side, deformed by basis_rank
// smooth sinusoidal modes whose coefficients oscillate smoothly in time.
struct SceneSpec {
  int rows = 10;
  int cols = 10;
  int frames = 20;
  int basis_rank = 2;
  double pixel_scale = 50.0;
  // Mode amplitude relative to pixel_scale.
  double amplitude = 0.1;
  // Spatial frequency band of the modes, in half-cycles per unit half-extent.
  double min_spatial_frequency = 1.0;
  double max_spatial_frequency = 1.5;
  // Temporal oscillation, in full cycles over the sequence.
  double min_temporal_cycles = 0.25;
  double max_temporal_cycles = 0.75;
  // Mode directions are normalize(in_plane * (g1, g2), depth * g3) for
  // standard normal g; in_plane = 0 gives pure depth bumps.
  double in_plane_weight = 1.0;
  double depth_weight = 0.25;
  // Camera path: rotation about a fixed axis by rotation_step per frame,
  // centered on the middle frame.
  Eigen::Vector3d rotation_axis{0.2, 1.0, 0.0};
  double rotation_step = 0.06;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Scene {
  SceneSpec spec;
  TrackMatrix tracks;
  RotationStack rotations;
  ShapeStack ground_truth;
  GridTopology topology;
};

Scene generate_scene(const SceneSpec& spec);

// Adds i.i.d. N(0, (ratio * max|W|)^2) noise to every entry.
TrackMatrix inject_noise(const TrackMatrix& tracks, double ratio, std::uint64_t seed);

using OutlierMask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;  // F x P

struct ContaminatedTracks {
  TrackMatrix tracks;
  OutlierMask mask;
};

// Replaces floor(ratio * F * P) distinct (frame, point) observations with
// uniform draws over [min W, max W].
ContaminatedTracks inject_outliers(const TrackMatrix& tracks, double ratio, std::uint64_t seed);

// Number of observations inject_outliers replaces.
long outlier_count(double ratio, int frames, int points);

}  // namespace nrsfm
