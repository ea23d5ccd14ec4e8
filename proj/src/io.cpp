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

#include "nrsfm/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nrsfm::io {

namespace {

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <typename T>
void put(std::ostream& os, T value) {
  const T le = to_little_endian(value);
  os.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return to_little_endian(value);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  return is;
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw IoError(what + " is " + std::to_string(m.rows()) + " x " + std::to_string(m.cols()) +
                  ", manifest declares " + std::to_string(rows) + " x " + std::to_string(cols));
  }
}

}  // namespace

void write_matrix(const fs::path& path, const Matrix& m) {
  std::ofstream os = open_out(path, std::ios::out | std::ios::binary);
  os.write(kMatrixMagic, sizeof(kMatrixMagic));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(os, m(r, c));
  }
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

Matrix read_matrix(const fs::path& path) {
  std::ifstream is = open_in(path, std::ios::in | std::ios::binary);
  char magic[sizeof(kMatrixMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0) {
    throw IoError("'" + path.string() + "' is not a binary matrix file");
  }
  const auto rows = get<std::uint32_t>(is);
  const auto cols = get<std::uint32_t>(is);
  if (!is) throw IoError("truncated header in '" + path.string() + "'");
  const auto expected =
      static_cast<std::uintmax_t>(kMatrixHeaderBytes) + std::uintmax_t{8} * rows * cols;
  if (fs::file_size(path) != expected) {
    throw IoError("'" + path.string() + "' size does not match its " + std::to_string(rows) +
                  " x " + std::to_string(cols) + " header");
  }
  Matrix m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = get<double>(is);
  }
  if (!is) throw IoError("truncated data in '" + path.string() + "'");
  return m;
}

Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream is = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    for (char& ch : line) {
      if (ch == ',' || ch == ';') ch = ' ';
    }
    std::istringstream ls(line);
    std::vector<double> row;
    std::string token;
    while (ls >> token) {
      try {
        size_t used = 0;
        row.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw IoError("'" + path.string() + "' line " + std::to_string(lineno) +
                      ": cannot parse '" + token + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("'" + path.string() + "' line " + std::to_string(lineno) + " has " +
                    std::to_string(row.size()) + " values, expected " +
                    std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("'" + path.string() + "' contains no data");
  Matrix m(rows.size(), rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Matrix read_matrix_any(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv" || ext == ".txt") return read_matrix_csv(path);
  return read_matrix(path);
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json files = {{"tracks", tracks_file}, {"topology", topology_file}};
  if (ground_truth_file) files["ground_truth"] = *ground_truth_file;
  if (rotations_file) files["rotations"] = *rotations_file;
  if (outlier_mask_file) files["outlier_mask"] = *outlier_mask_file;
  return {{"format", kManifestFormat},
          {"version", kManifestVersion},
          {"frames", frames},
          {"points", points},
          {"grid", {{"rows", grid_rows}, {"cols", grid_cols}}},
          {"files", files},
          {"contamination", contamination},
          {"scene", scene}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kManifestFormat) {
      throw IoError("manifest format tag is not '" + std::string(kManifestFormat) + "'");
    }
    if (j.at("version").get<int>() != kManifestVersion) {
      throw IoError("unsupported manifest version " + j.at("version").dump());
    }
    DatasetManifest m;
    m.frames = j.at("frames").get<int>();
    m.points = j.at("points").get<int>();
    m.grid_rows = j.at("grid").at("rows").get<int>();
    m.grid_cols = j.at("grid").at("cols").get<int>();
    const auto& files = j.at("files");
    m.tracks_file = files.at("tracks").get<std::string>();
    m.topology_file = files.at("topology").get<std::string>();
    if (files.contains("ground_truth")) m.ground_truth_file = files["ground_truth"].get<std::string>();
    if (files.contains("rotations")) m.rotations_file = files["rotations"].get<std::string>();
    if (files.contains("outlier_mask")) m.outlier_mask_file = files["outlier_mask"].get<std::string>();
    if (j.contains("contamination")) m.contamination = j["contamination"];
    if (j.contains("scene")) m.scene = j["scene"];
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
}

Dataset read_dataset(const fs::path& path) {
  const fs::path manifest_path = fs::is_directory(path) ? path / kManifestName : path;
  Dataset d;
  d.directory = manifest_path.parent_path();
  d.manifest = DatasetManifest::from_json(read_json(manifest_path));
  const auto& m = d.manifest;
  if (m.frames < 1 || m.points < 1) throw IoError("manifest declares an empty dataset");

  const Matrix tracks = read_matrix_any(d.directory / m.tracks_file);
  expect_shape(tracks, 2 * m.frames, m.points, "tracks");
  d.tracks = TrackMatrix(tracks);

  const Matrix topo = read_matrix_any(d.directory / m.topology_file);
  expect_shape(topo, m.grid_rows, m.grid_cols, "topology");
  d.topology = topology_from_matrix(topo);
  if (d.topology.points() != m.points) {
    throw IoError("topology has " + std::to_string(d.topology.points()) +
                  " present cells, manifest declares " + std::to_string(m.points) + " points");
  }
  if (m.ground_truth_file) {
    const Matrix gt = read_matrix_any(d.directory / *m.ground_truth_file);
    expect_shape(gt, 3 * m.frames, m.points, "ground truth");
    d.ground_truth = ShapeStack(gt);
  }
  if (m.rotations_file) {
    const Matrix rot = read_matrix_any(d.directory / *m.rotations_file);
    expect_shape(rot, 2 * m.frames, 3, "rotations");
    d.rotations = rotations_from_matrix(rot);
  }
  if (m.outlier_mask_file) {
    const Matrix mask = read_matrix_any(d.directory / *m.outlier_mask_file);
    expect_shape(mask, m.frames, m.points, "outlier mask");
    d.outlier_mask = mask_from_matrix(mask);
  }
  return d;
}

fs::path write_dataset(const fs::path& directory, const DatasetWrite& data) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create '" + directory.string() + "': " + ec.message());

  DatasetManifest m;
  m.frames = data.tracks.frames();
  m.points = data.tracks.points();
  m.grid_rows = data.topology.rows();
  m.grid_cols = data.topology.cols();
  m.tracks_file = "tracks.bin";
  m.topology_file = "topology.bin";
  write_matrix(directory / m.tracks_file, data.tracks.data());
  write_matrix(directory / m.topology_file, topology_to_matrix(data.topology));
  if (data.ground_truth) {
    m.ground_truth_file = "gt_shape.bin";
    write_matrix(directory / *m.ground_truth_file, data.ground_truth->data());
  }
  if (data.rotations) {
    m.rotations_file = "rotations.bin";
    write_matrix(directory / *m.rotations_file, rotations_to_matrix(*data.rotations));
  }
  if (data.outlier_mask) {
    m.outlier_mask_file = "outlier_mask.bin";
    write_matrix(directory / *m.outlier_mask_file, mask_to_matrix(*data.outlier_mask));
  }
  m.contamination = data.contamination;
  m.scene = data.scene;
  const fs::path manifest_path = directory / kManifestName;
  write_json(manifest_path, m.to_json());
  return manifest_path;
}

Matrix rotations_to_matrix(const RotationStack& rotations) {
  Matrix m(2 * rotations.frames(), 3);
  for (int i = 0; i < rotations.frames(); ++i) m.middleRows<2>(2 * i) = rotations.block(i);
  return m;
}

std::vector<CameraBlock> rotations_from_matrix(const Matrix& m) {
  if (m.cols() != 3 || m.rows() % 2 != 0 || m.rows() == 0) {
    throw IoError("rotation matrix must be 2F x 3");
  }
  std::vector<CameraBlock> blocks(m.rows() / 2);
  for (size_t i = 0; i < blocks.size(); ++i) blocks[i] = m.middleRows<2>(2 * i);
  return blocks;
}

Matrix topology_to_matrix(const GridTopology& topology) {
  Matrix m(topology.rows(), topology.cols());
  for (int r = 0; r < topology.rows(); ++r) {
    for (int c = 0; c < topology.cols(); ++c) {
      m(r, c) = topology.index(r, c) == GridTopology::kAbsent ? 0.0 : 1.0;
    }
  }
  return m;
}

GridTopology topology_from_matrix(const Matrix& m) {
  std::vector<bool> mask(static_cast<size_t>(m.rows()) * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0.0 && m(r, c) != 1.0) throw IoError("topology mask entries must be 0 or 1");
      mask[static_cast<size_t>(r) * m.cols() + c] = m(r, c) == 1.0;
    }
  }
  return GridTopology::from_mask(static_cast<int>(m.rows()), static_cast<int>(m.cols()), mask);
}

Matrix mask_to_matrix(const OutlierMask& mask) { return mask.cast<double>(); }

OutlierMask mask_from_matrix(const Matrix& m) {
  return m.unaryExpr([](double v) { return v != 0.0 ? 1.0 : 0.0; }).cast<bool>();
}

std::vector<Eigen::Vector3i> grid_faces(const GridTopology& topology) {
  std::vector<Eigen::Vector3i> faces;
  for (int r = 0; r + 1 < topology.rows(); ++r) {
    for (int c = 0; c + 1 < topology.cols(); ++c) {
      const int a = topology.index(r, c);
      const int b = topology.index(r, c + 1);
      const int d = topology.index(r + 1, c);
      const int e = topology.index(r + 1, c + 1);
      if (a == GridTopology::kAbsent || b == GridTopology::kAbsent ||
          d == GridTopology::kAbsent || e == GridTopology::kAbsent) {
        continue;
      }
      faces.emplace_back(a, d, b);
      faces.emplace_back(b, d, e);
    }
  }
  return faces;
}

void write_obj(const fs::path& path, const Matrix& vertices,
               const std::vector<Eigen::Vector3i>& faces) {
  std::ofstream os = open_out(path);
  os << std::setprecision(17);
  for (Eigen::Index j = 0; j < vertices.cols(); ++j) {
    os << "v " << vertices(0, j) << ' ' << vertices(1, j) << ' ' << vertices(2, j) << '\n';
  }
  for (const auto& f : faces) os << "f " << f(0) + 1 << ' ' << f(1) + 1 << ' ' << f(2) + 1 << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

void write_ply(const fs::path& path, const Matrix& vertices,
               const std::vector<Eigen::Vector3i>& faces) {
  std::ofstream os = open_out(path);
  os << "ply\nformat ascii 1.0\n"
     << "element vertex " << vertices.cols() << "\n"
     << "property double x\nproperty double y\nproperty double z\n"
     << "element face " << faces.size() << "\n"
     << "property list uchar int vertex_indices\nend_header\n";
  os << std::setprecision(17);
  for (Eigen::Index j = 0; j < vertices.cols(); ++j) {
    os << vertices(0, j) << ' ' << vertices(1, j) << ' ' << vertices(2, j) << '\n';
  }
  for (const auto& f : faces) os << "3 " << f(0) << ' ' << f(1) << ' ' << f(2) << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

nlohmann::json report_to_json(const SolveReport& report) {
  return {{"objective_trace", report.objective_trace},
          {"cg_iterations", report.cg_iterations},
          {"converged", report.converged},
          {"subproblems_converged", report.subproblems_converged},
          {"final_objective", report.final_objective},
          {"delta", report.delta}};
}

nlohmann::json scene_spec_to_json(const SceneSpec& spec) {
  return {{"rows", spec.rows},
          {"cols", spec.cols},
          {"frames", spec.frames},
          {"basis_rank", spec.basis_rank},
          {"pixel_scale", spec.pixel_scale},
          {"amplitude", spec.amplitude},
          {"min_spatial_frequency", spec.min_spatial_frequency},
          {"max_spatial_frequency", spec.max_spatial_frequency},
          {"min_temporal_cycles", spec.min_temporal_cycles},
          {"max_temporal_cycles", spec.max_temporal_cycles},
          {"in_plane_weight", spec.in_plane_weight},
          {"depth_weight", spec.depth_weight},
          {"rotation_axis", {spec.rotation_axis(0), spec.rotation_axis(1), spec.rotation_axis(2)}},
          {"rotation_step", spec.rotation_step},
          {"seed", spec.seed}};
}

void apply_scene_json(const nlohmann::json& j, SceneSpec& spec) {
  if (!j.is_object()) throw IoError("scene config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "rows") spec.rows = value.get<int>();
      else if (key == "cols") spec.cols = value.get<int>();
      else if (key == "frames") spec.frames = value.get<int>();
      else if (key == "basis_rank") spec.basis_rank = value.get<int>();
      else if (key == "pixel_scale") spec.pixel_scale = value.get<double>();
      else if (key == "amplitude") spec.amplitude = value.get<double>();
      else if (key == "min_spatial_frequency") spec.min_spatial_frequency = value.get<double>();
      else if (key == "max_spatial_frequency") spec.max_spatial_frequency = value.get<double>();
      else if (key == "min_temporal_cycles") spec.min_temporal_cycles = value.get<double>();
      else if (key == "max_temporal_cycles") spec.max_temporal_cycles = value.get<double>();
      else if (key == "in_plane_weight") spec.in_plane_weight = value.get<double>();
      else if (key == "depth_weight") spec.depth_weight = value.get<double>();
      else if (key == "rotation_step") spec.rotation_step = value.get<double>();
      else if (key == "seed") spec.seed = value.get<std::uint64_t>();
      else if (key == "rotation_axis") {
        const auto axis = value.get<std::vector<double>>();
        if (axis.size() != 3) throw IoError("rotation_axis needs three components");
        spec.rotation_axis = Eigen::Vector3d(axis[0], axis[1], axis[2]);
      } else {
        throw IoError("unknown scene config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed scene config: ") + e.what());
  }
}

nlohmann::json config_to_json(const SolverConfig& cfg) {
  nlohmann::json j = {{"lambda1", cfg.lambda1},
                      {"lambda2", cfg.lambda2},
                      {"irls_max_iters", cfg.irls_max_iters},
                      {"cg_max_iters", cfg.cg_max_iters},
                      {"cg_tol", cfg.cg_tol},
                      {"objective_tol", cfg.objective_tol},
                      {"inner_solver", cfg.inner_solver == InnerSolver::kConjugateGradient
                                           ? "cg"
                                           : "gradient-descent"}};
  if (cfg.delta) j["delta"] = *cfg.delta;
  return j;
}

void apply_config_json(const nlohmann::json& j, SolverConfig& cfg) {
  if (!j.is_object()) throw IoError("solver config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "lambda1") cfg.lambda1 = value.get<double>();
      else if (key == "lambda2") cfg.lambda2 = value.get<double>();
      else if (key == "delta") cfg.delta = value.get<double>();
      else if (key == "irls_max_iters") cfg.irls_max_iters = value.get<int>();
      else if (key == "cg_max_iters") cfg.cg_max_iters = value.get<int>();
      else if (key == "cg_tol") cfg.cg_tol = value.get<double>();
      else if (key == "objective_tol") cfg.objective_tol = value.get<double>();
      else if (key == "inner_solver") {
        const auto name = value.get<std::string>();
        if (name == "cg") cfg.inner_solver = InnerSolver::kConjugateGradient;
        else if (name == "gradient-descent") cfg.inner_solver = InnerSolver::kGradientDescent;
        else throw IoError("unknown inner_solver '" + name + "'");
      } else {
        throw IoError("unknown solver config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed solver config: ") + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os = open_out(path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is = open_in(path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace nrsfm::io
