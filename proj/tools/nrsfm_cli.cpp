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

// Command-line front end: synthesize, reconstruct, evaluate, sweep.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nrsfm/errors.hpp"
#include "nrsfm/eval.hpp"
#include "nrsfm/io.hpp"
#include "nrsfm/pipeline.hpp"
#include "nrsfm/rotation.hpp"
#include "nrsfm/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string config;
  std::string output;
};

struct SceneFlags {
  std::string grid;
  int frames = 0;
  int basis_rank = 0;
  double amplitude = 0.0;
  double rotation_step = 0.0;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* frames_opt = nullptr;
  CLI::Option* rank_opt = nullptr;
  CLI::Option* amplitude_opt = nullptr;
  CLI::Option* step_opt = nullptr;

  void attach(CLI::App* cmd) {
    grid_opt = cmd->add_option("--grid", grid, "Grid size as ROWSxCOLS");
    frames_opt = cmd->add_option("--frames", frames, "Number of frames")->check(CLI::PositiveNumber);
    rank_opt = cmd->add_option("--basis-rank", basis_rank, "Number of deformation modes")
                   ->check(CLI::PositiveNumber);
    amplitude_opt = cmd->add_option("--amplitude", amplitude,
                                    "Deformation amplitude relative to the grid half-extent")
                        ->check(CLI::NonNegativeNumber);
    step_opt = cmd->add_option("--rotation-step", rotation_step,
                               "Camera rotation per frame in radians");
  }
};

struct SolverFlags {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double delta = 0.0;
  int irls_max_iters = 0;
  int cg_max_iters = 0;
  double cg_tol = 0.0;
  double objective_tol = 0.0;
  std::string inner_solver;
  std::vector<std::pair<CLI::Option*, std::function<void(nrsfm::SolverConfig&)>>> overrides;

  void attach(CLI::App* cmd) {
    auto bind = [&](CLI::Option* opt, std::function<void(nrsfm::SolverConfig&)> set) {
      overrides.emplace_back(opt, std::move(set));
    };
    bind(cmd->add_option("--lambda1", lambda1, "Temporal smoothness weight"),
         [this](nrsfm::SolverConfig& c) { c.lambda1 = lambda1; });
    bind(cmd->add_option("--lambda2", lambda2, "Spatial smoothness weight"),
         [this](nrsfm::SolverConfig& c) { c.lambda2 = lambda2; });
    bind(cmd->add_option("--delta", delta, "IRLS smoothing in track units"),
         [this](nrsfm::SolverConfig& c) { c.delta = delta; });
    bind(cmd->add_option("--irls-max-iters", irls_max_iters, "Outer iteration budget"),
         [this](nrsfm::SolverConfig& c) { c.irls_max_iters = irls_max_iters; });
    bind(cmd->add_option("--cg-max-iters", cg_max_iters, "Inner iteration budget"),
         [this](nrsfm::SolverConfig& c) { c.cg_max_iters = cg_max_iters; });
    bind(cmd->add_option("--cg-tol", cg_tol, "Inner relative residual tolerance"),
         [this](nrsfm::SolverConfig& c) { c.cg_tol = cg_tol; });
    bind(cmd->add_option("--objective-tol", objective_tol, "Outer relative decrease tolerance"),
         [this](nrsfm::SolverConfig& c) { c.objective_tol = objective_tol; });
    bind(cmd->add_option("--inner-solver", inner_solver, "cg or gradient-descent")
             ->check(CLI::IsMember({"cg", "gradient-descent"})),
         [this](nrsfm::SolverConfig& c) {
           c.inner_solver = inner_solver == "cg" ? nrsfm::InnerSolver::kConjugateGradient
                                                 : nrsfm::InnerSolver::kGradientDescent;
         });
  }

  void apply(nrsfm::SolverConfig& cfg) const {
    for (const auto& [opt, set] : overrides) {
      if (opt->count() > 0) set(cfg);
    }
  }
};

json load_config(const GlobalOptions& global) {
  if (global.config.empty()) return json::object();
  json j = nrsfm::io::read_json(global.config);
  if (!j.is_object()) throw nrsfm::IoError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "solver" && key != "scene") {
      throw nrsfm::IoError("unknown config section '" + key + "' (expected solver, scene)");
    }
  }
  return j;
}

nrsfm::SolverConfig resolve_solver(const json& config, const SolverFlags& flags) {
  nrsfm::SolverConfig cfg;
  if (config.contains("solver")) nrsfm::io::apply_config_json(config["solver"], cfg);
  flags.apply(cfg);
  cfg.validate();
  return cfg;
}

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw nrsfm::DataValidationError("grid must look like 10x10");
  try {
    size_t used_r = 0, used_c = 0;
    const std::string rs = text.substr(0, x), cs = text.substr(x + 1);
    const int rows = std::stoi(rs, &used_r);
    const int cols = std::stoi(cs, &used_c);
    if (used_r != rs.size() || used_c != cs.size() || rows < 1 || cols < 1) throw 0;
    return {rows, cols};
  } catch (...) {
    throw nrsfm::DataValidationError("grid must look like 10x10, got '" + text + "'");
  }
}

nrsfm::SceneSpec resolve_scene(const json& config, const SceneFlags& flags,
                               const GlobalOptions& global, const CLI::App& app) {
  nrsfm::SceneSpec spec;
  if (config.contains("scene")) nrsfm::io::apply_scene_json(config["scene"], spec);
  if (flags.grid_opt->count()) std::tie(spec.rows, spec.cols) = parse_grid(flags.grid);
  if (flags.frames_opt->count()) spec.frames = flags.frames;
  if (flags.rank_opt->count()) spec.basis_rank = flags.basis_rank;
  if (flags.amplitude_opt->count()) spec.amplitude = flags.amplitude;
  if (flags.step_opt->count()) spec.rotation_step = flags.rotation_step;
  if (app.get_option("--seed")->count() || !(config.contains("scene") &&
                                             config["scene"].contains("seed"))) {
    spec.seed = global.seed;
  }
  spec.validate();
  return spec;
}

int bounded_jobs(int requested) {
  const int cores = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::clamp(requested, 1, cores);
}

nrsfm::Matrix read_shape_input(const fs::path& path) {
  if (fs::is_directory(path)) {
    if (fs::exists(path / nrsfm::io::kManifestName)) {
      auto dataset = nrsfm::io::read_dataset(path);
      if (!dataset.ground_truth) {
        throw nrsfm::IoError("dataset '" + path.string() + "' has no ground-truth shape");
      }
      return dataset.ground_truth->data();
    }
    if (fs::exists(path / "shape.bin")) return nrsfm::io::read_matrix(path / "shape.bin");
    throw nrsfm::IoError("'" + path.string() + "' holds neither a dataset nor a shape file");
  }
  return nrsfm::io::read_matrix_any(path);
}

std::vector<double> parse_noise_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      parts.push_back(std::stod(item));
    } catch (...) {
      throw nrsfm::DataValidationError("cannot parse noise range '" + text + "'");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
    throw nrsfm::DataValidationError("noise range must be START:STEP:STOP, got '" + text + "'");
  }
  std::vector<double> levels;
  const int count = static_cast<int>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9)) + 1;
  for (int k = 0; k < count; ++k) {
    // Round to a decimal grid so labels print cleanly.
    levels.push_back(std::round((parts[0] + k * parts[1]) * 1e12) / 1e12);
  }
  return levels;
}

void write_table(const fs::path& dir, const std::string& stem, const nrsfm::SweepTable& table) {
  fs::create_directories(dir);
  std::ofstream csv(dir / (stem + ".csv"));
  if (!csv) throw nrsfm::IoError("cannot write '" + (dir / (stem + ".csv")).string() + "'");
  nrsfm::write_sweep_csv(table, csv);
  nrsfm::io::write_json(dir / (stem + ".json"), nrsfm::sweep_to_json(table));
}

void print_table(const std::string& title, const nrsfm::SweepTable& table) {
  std::cout << title << '\n';
  for (const auto& row : table.rows) {
    std::cout << "  " << nrsfm::setting_label(row.setting);
    for (const auto& st : row.stats) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "  %s %.4f±%.4f%s", std::string(nrsfm::method_name(st.method)).c_str(),
                    st.mean, st.stddev, st.all_converged ? "" : "*");
      std::cout << buf;
    }
    std::cout << '\n';
  }
}

int run_synthesize(const GlobalOptions& global, const SceneFlags& flags, double noise,
                   double outliers, const CLI::App& app) {
  const json config = load_config(global);
  const nrsfm::SceneSpec spec = resolve_scene(config, flags, global, app);
  const nrsfm::Scene scene = nrsfm::generate_scene(spec);

  nrsfm::TrackMatrix tracks = scene.tracks;
  std::optional<nrsfm::OutlierMask> mask;
  json contamination = {{"noise_ratio", noise}, {"outlier_ratio", outliers}};
  const std::uint64_t cseed = spec.seed;
  if (noise > 0.0) {
    tracks = nrsfm::inject_noise(tracks, noise, cseed);
    contamination["noise_seed"] = cseed;
  }
  if (outliers > 0.0) {
    auto contaminated = nrsfm::inject_outliers(tracks, outliers, cseed + 1);
    tracks = std::move(contaminated.tracks);
    mask = std::move(contaminated.mask);
    contamination["outlier_seed"] = cseed + 1;
    contamination["outlier_count"] = nrsfm::outlier_count(outliers, spec.frames, tracks.points());
  }

  const fs::path dir = global.output.empty() ? fs::path("dataset") : fs::path(global.output);
  nrsfm::io::DatasetWrite write{tracks, scene.topology};
  write.ground_truth = &scene.ground_truth;
  write.rotations = &scene.rotations;
  write.outlier_mask = mask ? &*mask : nullptr;
  write.contamination = contamination;
  write.scene = nrsfm::io::scene_spec_to_json(spec);
  std::cout << nrsfm::io::write_dataset(dir, write).string() << '\n';
  return 0;
}

int run_reconstruct(const GlobalOptions& global, const SolverFlags& flags,
                    const std::string& dataset_path, const std::string& method_name,
                    bool estimate_rotations, bool no_meshes) {
  const json config = load_config(global);
  const nrsfm::SolverConfig cfg = resolve_solver(config, flags);
  const nrsfm::Method method = nrsfm::parse_method(method_name);
  const nrsfm::io::Dataset dataset = nrsfm::io::read_dataset(dataset_path);

  nrsfm::RotationSource rotations;
  if (estimate_rotations) {
    rotations = nrsfm::estimate_rigid_rotations(dataset.tracks);
  } else if (dataset.rotations) {
    rotations = nrsfm::validate_rotations(*dataset.rotations);
  } else {
    throw nrsfm::DataValidationError(
        "dataset has no rotation file; pass --estimate-rotations to estimate rigid cameras");
  }

  const nrsfm::Reconstruction rec =
      nrsfm::reconstruct(method, dataset.tracks, rotations.stack, dataset.topology, cfg);

  const fs::path dir =
      global.output.empty() ? fs::path("reconstruction") : fs::path(global.output);
  fs::create_directories(dir);
  nrsfm::io::write_matrix(dir / "shape.bin", rec.shape.data());

  json report = {{"method", std::string(nrsfm::method_name(method))},
                 {"config", nrsfm::io::config_to_json(cfg)},
                 {"rotations",
                  {{"mode", rotations.mode == nrsfm::RotationMode::kProvided ? "provided"
                                                                             : "estimated"},
                   {"residuals", rotations.residuals}}},
                 {"frames", rec.shape.frames()},
                 {"points", rec.shape.points()}};
  bool warn = false;
  if (rec.report) {
    report["solve"] = nrsfm::io::report_to_json(*rec.report);
    warn = !rec.report->converged || !rec.report->subproblems_converged;
  }
  report["warning"] = warn;
  nrsfm::io::write_json(dir / "report.json", report);

  if (!no_meshes) {
    const auto faces = nrsfm::io::grid_faces(dataset.topology);
    const fs::path meshes = dir / "meshes";
    fs::create_directories(meshes);
    for (int i = 0; i < rec.shape.frames(); ++i) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "frame_%04d", i);
      const nrsfm::Matrix vertices = rec.shape.frame(i);
      nrsfm::io::write_obj(meshes / (std::string(stem) + ".obj"), vertices, faces);
      nrsfm::io::write_ply(meshes / (std::string(stem) + ".ply"), vertices, faces);
    }
  }
  if (warn) std::cerr << "warning: solver did not reach its tolerance; see report.json\n";
  std::cout << (dir / "shape.bin").string() << '\n';
  return 0;
}

int run_evaluate(const GlobalOptions& global, const std::string& estimate_path,
                 const std::string& truth_path) {
  const nrsfm::ShapeStack estimate(read_shape_input(estimate_path));
  const nrsfm::ShapeStack truth(read_shape_input(truth_path));
  const nrsfm::ErrorReport report = nrsfm::rms_error(estimate, truth);
  const fs::path out =
      global.output.empty() ? fs::path("evaluation.json") : fs::path(global.output);
  nrsfm::io::write_json(out, nrsfm::error_report_to_json(report));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", report.mean_error);
  std::cout << "mean_error " << buf << '\n';
  std::cout << "flip_applied " << (report.flip_applied ? "true" : "false") << '\n';
  return 0;
}

int run_sweep_cmd(const GlobalOptions& global, const SceneFlags& scene_flags,
                  const SolverFlags& solver_flags, const std::string& dataset_path,
                  const std::string& noise, const std::vector<double>& outliers_percent,
                  int repeats, const std::vector<std::string>& methods, const CLI::App& app) {
  const json config = load_config(global);
  const nrsfm::SolverConfig cfg = resolve_solver(config, solver_flags);

  nrsfm::Scene scene;
  if (!dataset_path.empty()) {
    auto dataset = nrsfm::io::read_dataset(dataset_path);
    if (!dataset.ground_truth || !dataset.rotations) {
      throw nrsfm::DataValidationError("sweeps need a dataset with ground truth and rotations");
    }
    scene.tracks = dataset.tracks;
    scene.rotations = nrsfm::validate_rotations(*dataset.rotations).stack;
    scene.ground_truth = *dataset.ground_truth;
    scene.topology = dataset.topology;
  } else {
    scene = nrsfm::generate_scene(resolve_scene(config, scene_flags, global, app));
  }

  nrsfm::SweepOptions options;
  options.repeats = repeats;
  options.first_seed = global.seed;
  options.jobs = bounded_jobs(global.jobs);
  if (!methods.empty()) {
    options.methods.clear();
    for (const auto& m : methods) options.methods.push_back(nrsfm::parse_method(m));
  }

  const fs::path dir = global.output.empty() ? fs::path("sweep") : fs::path(global.output);
  bool any = false;
  if (!noise.empty()) {
    std::vector<nrsfm::SweepSetting> grid;
    for (double r : parse_noise_range(noise)) grid.push_back({nrsfm::Contamination::kNoise, r});
    const auto table = nrsfm::run_sweep(scene, grid, cfg, options);
    write_table(dir, "noise", table);
    print_table("noise", table);
    any = true;
  }
  if (!outliers_percent.empty()) {
    std::vector<nrsfm::SweepSetting> grid;
    for (double pct : outliers_percent) {
      if (pct < 0.0 || pct > 100.0) {
        throw nrsfm::DataValidationError("outlier percentages must lie in [0, 100]");
      }
      grid.push_back({nrsfm::Contamination::kOutliers, pct / 100.0});
    }
    const auto table = nrsfm::run_sweep(scene, grid, cfg, options);
    write_table(dir, "outliers", table);
    print_table("outliers", table);
    any = true;
  }
  if (!any) {
    const auto table = nrsfm::run_sweep(scene, {}, cfg, options);
    write_table(dir, "clean", table);
    print_table("clean", table);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense non-rigid structure from motion with spatial-temporal smoothness"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Random seed for scenes and contamination");
  app.add_option("--jobs", global.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--config", global.config, "JSON config with 'solver' and 'scene' sections")
      ->check(CLI::ExistingFile);
  app.add_option("--output", global.output, "Output directory or file");

  auto* synth = app.add_subcommand("synthesize", "Generate a synthetic dataset");
  SceneFlags synth_scene;
  synth_scene.attach(synth);
  double noise_ratio = 0.0;
  double outlier_ratio = 0.0;
  synth->add_option("--noise", noise_ratio, "Gaussian noise ratio r (sigma = r max|W|)")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--outliers", outlier_ratio, "Fraction of observations replaced")
      ->check(CLI::Range(0.0, 1.0));

  auto* recon = app.add_subcommand("reconstruct", "Reconstruct shapes from a dataset");
  SolverFlags recon_solver;
  recon_solver.attach(recon);
  std::string dataset_path;
  std::string method = "st-l1";
  bool estimate = false;
  bool no_meshes = false;
  recon->add_option("dataset", dataset_path, "Dataset directory or manifest")->required();
  recon->add_option("--method", method, "pinv, temporal, st-l2 or st-l1")
      ->check(CLI::IsMember({"pinv", "temporal", "st-l2", "st-l1"}));
  recon->add_flag("--estimate-rotations", estimate, "Estimate rigid cameras from the tracks");
  recon->add_flag("--no-meshes", no_meshes, "Skip per-frame OBJ/PLY export");

  auto* evaluate = app.add_subcommand("evaluate", "Compare a reconstruction with ground truth");
  std::string estimate_path, truth_path;
  evaluate->add_option("estimate", estimate_path, "Shape file or reconstruction directory")
      ->required();
  evaluate->add_option("truth", truth_path, "Shape file or dataset directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a contamination sweep");
  SceneFlags sweep_scene;
  sweep_scene.attach(sweep);
  SolverFlags sweep_solver;
  sweep_solver.attach(sweep);
  std::string sweep_dataset, noise_range;
  std::vector<double> outliers_percent;
  int repeats = 5;
  std::vector<std::string> methods;
  sweep->add_option("--dataset", sweep_dataset, "Dataset with ground truth and rotations");
  sweep->add_option("--noise", noise_range, "Noise ratios as START:STEP:STOP");
  sweep->add_option("--outliers", outliers_percent, "Outlier percentages, comma separated")
      ->delimiter(',');
  sweep->add_option("--repeats", repeats, "Seeds per contaminated setting")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--methods", methods, "Subset of pinv,temporal,st-l2,st-l1")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synthesize(global, synth_scene, noise_ratio, outlier_ratio, app);
    if (*recon) return run_reconstruct(global, recon_solver, dataset_path, method, estimate, no_meshes);
    if (*evaluate) return run_evaluate(global, estimate_path, truth_path);
    if (*sweep) {
      return run_sweep_cmd(global, sweep_scene, sweep_solver, sweep_dataset, noise_range,
                           outliers_percent, repeats, methods, app);
    }
  } catch (const nrsfm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
