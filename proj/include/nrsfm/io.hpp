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
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "nrsfm/model.hpp"
#include "nrsfm/solver.hpp"
#include "nrsfm/synth.hpp"

namespace nrsfm::io {

namespace fs = std::filesystem;

// Binary matrix file: 8-byte magic "NRSFMMAT", uint32 rows, uint32 cols (all
// little-endian), then rows * cols little-endian float64 values in row-major
// order.
inline constexpr char kMatrixMagic[8] = {'N', 'R', 'S', 'F', 'M', 'M', 'A', 'T'};
inline constexpr int kMatrixHeaderBytes = 16;

void write_matrix(const fs::path& path, const Matrix& m);
Matrix read_matrix(const fs::path& path);

// Comma- or whitespace-separated text, one matrix row per line. Lines that
// start with '#' are skipped.
Matrix read_matrix_csv(const fs::path& path);

// Dispatches on extension: ".csv" / ".txt" read as text, anything else binary.
Matrix read_matrix_any(const fs::path& path);

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kManifestFormat = "nrsfm-dataset";
inline constexpr int kManifestVersion = 1;

struct DatasetManifest {
  int frames = 0;
  int points = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  std::string tracks_file;
  std::string topology_file;
  std::optional<std::string> ground_truth_file;
  std::optional<std::string> rotations_file;
  std::optional<std::string> outlier_mask_file;
  nlohmann::json contamination = nlohmann::json::object();
  nlohmann::json scene = nlohmann::json::object();

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

struct Dataset {
  fs::path directory;
  DatasetManifest manifest;
  TrackMatrix tracks;
  GridTopology topology;
  std::optional<ShapeStack> ground_truth;
  std::optional<std::vector<CameraBlock>> rotations;
  std::optional<OutlierMask> outlier_mask;
};

// Reads a dataset directory (or a manifest path) and checks every declared
// dimension against the file contents.
Dataset read_dataset(const fs::path& path);

struct DatasetWrite {
  const TrackMatrix& tracks;
  const GridTopology& topology;
  const ShapeStack* ground_truth = nullptr;
  const RotationStack* rotations = nullptr;
  const OutlierMask* outlier_mask = nullptr;
  nlohmann::json contamination = nlohmann::json::object();
  nlohmann::json scene = nlohmann::json::object();
};

// Writes the binary files and the manifest; returns the manifest path.
fs::path write_dataset(const fs::path& directory, const DatasetWrite& data);

// 2F x 3 matrix, camera i in rows 2i and 2i + 1.
Matrix rotations_to_matrix(const RotationStack& rotations);
std::vector<CameraBlock> rotations_from_matrix(const Matrix& m);

Matrix topology_to_matrix(const GridTopology& topology);
GridTopology topology_from_matrix(const Matrix& m);

Matrix mask_to_matrix(const OutlierMask& mask);
OutlierMask mask_from_matrix(const Matrix& m);

// Triangles from every complete quad of present grid cells, two per quad.
std::vector<Eigen::Vector3i> grid_faces(const GridTopology& topology);

void write_obj(const fs::path& path, const Matrix& vertices3xp,
               const std::vector<Eigen::Vector3i>& faces);
void write_ply(const fs::path& path, const Matrix& vertices3xp,
               const std::vector<Eigen::Vector3i>& faces);

nlohmann::json report_to_json(const SolveReport& report);
nlohmann::json scene_spec_to_json(const SceneSpec& spec);
// Overlays keys present in j onto spec; unknown keys are rejected.
void apply_scene_json(const nlohmann::json& j, SceneSpec& spec);
nlohmann::json config_to_json(const SolverConfig& cfg);
// Overlays keys present in j onto cfg; unknown keys are rejected.
void apply_config_json(const nlohmann::json& j, SolverConfig& cfg);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

}  // namespace nrsfm::io
