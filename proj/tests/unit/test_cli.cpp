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

// End-to-end checks of the command-line tool.

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "nrsfm/eval.hpp"
#include "nrsfm/io.hpp"
#include "nrsfm/pipeline.hpp"
#include "nrsfm/rotation.hpp"
#include "test_support.hpp"

using namespace nrsfm;
using namespace nrsfm::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "nrsfm_cli_test";

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path out = kWork / "stdout.txt";
  const std::string cmd =
      std::string("\"") + NRSFM_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream is(out);
  std::stringstream ss;
  ss << is.rdbuf();
  return {status, ss.str()};
}

std::string bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string path(const std::string& name) { return "\"" + (kWork / name).string() + "\""; }

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

const Workspace workspace;

int count_lines(const fs::path& p, const std::string& prefix) {
  std::ifstream is(p);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) n += line.rfind(prefix, 0) == 0 ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("synthesize writes a dataset with the requested dimensions") {
  const Run r = run("--seed 1 --output " + path("ds1") + " synthesize --grid 10x10 --frames 20");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("manifest.json") != std::string::npos);
  const auto d = io::read_dataset(kWork / "ds1");
  CHECK(d.tracks.data().rows() == 40);
  CHECK(d.tracks.data().cols() == 100);
  CHECK(d.ground_truth->data().rows() == 60);
  CHECK(d.ground_truth->data().cols() == 100);
  CHECK(d.rotations->size() == 20);
  CHECK(d.manifest.grid_rows == 10);
}

TEST_CASE("synthesize is deterministic") {
  REQUIRE(run("--seed 1 --output " + path("ds2") + " synthesize --grid 10x10 --frames 20").status == 0);
  for (const char* f : {"tracks.bin", "gt_shape.bin", "rotations.bin", "topology.bin", "manifest.json"}) {
    CHECK(bytes(kWork / "ds1" / f) == bytes(kWork / "ds2" / f));
  }
}

TEST_CASE("synthesize records contamination and the outlier mask") {
  REQUIRE(run("--seed 2 --output " + path("ds_out") + " synthesize --outliers 0.04").status == 0);
  const auto d = io::read_dataset(kWork / "ds_out");
  REQUIRE(d.outlier_mask.has_value());
  CHECK(d.outlier_mask->count() == outlier_count(0.04, 20, 100));
  CHECK(d.manifest.contamination["outlier_ratio"] == 0.04);
  CHECK(d.manifest.contamination["outlier_count"] == 80);
}

TEST_CASE("reconstruct is a thin shell over the library") {
  REQUIRE(run("--output " + path("rec_t") + " reconstruct " + path("ds1") +
              " --method temporal --lambda1 1e-3").status == 0);
  const auto d = io::read_dataset(kWork / "ds1");
  SolverConfig cfg;
  cfg.lambda1 = 1e-3;
  const auto rotations = validate_rotations(*d.rotations).stack;
  const auto lib = reconstruct(Method::kTemporal, d.tracks, rotations, d.topology, cfg);
  CHECK(io::read_matrix(kWork / "rec_t" / "shape.bin") == lib.shape.data());
  int meshes = 0;
  for (const auto& e : fs::directory_iterator(kWork / "rec_t" / "meshes")) {
    meshes += e.path().extension() == ".obj" || e.path().extension() == ".ply";
  }
  CHECK(meshes == 40);
}

TEST_CASE("robust reconstruction uses the default weights") {
  REQUIRE(run("--output " + path("rec_l1") + " reconstruct " + path("ds_out") + " --no-meshes").status == 0);
  const auto report = io::read_json(kWork / "rec_l1" / "report.json");
  CHECK(report["method"] == "st-l1");
  CHECK(report["config"]["lambda1"] == 1e-3);
  CHECK(report["config"]["lambda2"] == 1.0);
  CHECK(report.contains("solve"));
  CHECK(report["solve"]["objective_trace"].size() >= 2);
}

TEST_CASE("pseudo-inverse reconstructions are planar per frame") {
  REQUIRE(run("--output " + path("rec_p") + " reconstruct " + path("ds1") + " --method pinv --no-meshes").status == 0);
  const ShapeStack s(io::read_matrix(kWork / "rec_p" / "shape.bin"));
  for (int i = 0; i < s.frames(); ++i) {
    Dense frame = s.frame(i);
    frame.colwise() -= frame.rowwise().mean();
    CHECK(numeric_rank(frame) <= 2);
  }
}

TEST_CASE("missing rotations need the estimation flag") {
  const auto d = io::read_dataset(kWork / "ds1");
  io::DatasetWrite w{d.tracks, d.topology};
  w.ground_truth = &*d.ground_truth;
  io::write_dataset(kWork / "ds_norot", w);
  const Run r = run("--output " + path("rec_n") + " reconstruct " + path("ds_norot") + " --method temporal");
  CHECK(r.status != 0);
  CHECK(r.out.find("--estimate-rotations") != std::string::npos);
  const Run ok = run("--output " + path("rec_n") + " reconstruct " + path("ds_norot") +
                     " --method temporal --estimate-rotations --no-meshes");
  CHECK(ok.status == 0);
  CHECK(io::read_json(kWork / "rec_n" / "report.json")["rotations"]["mode"] == "estimated");
}

TEST_CASE("evaluate prints the mean error with four decimals") {
  const auto d = io::read_dataset(kWork / "ds1");
  const Dense gt = d.ground_truth->data();
  Dense flipped = gt;
  for (int i = 0; i < 20; ++i) flipped.row(3 * i + 2) *= -1.0;
  io::write_matrix(kWork / "same.bin", gt);
  io::write_matrix(kWork / "flip.bin", flipped);
  io::write_matrix(kWork / "scaled.bin", 1.1 * gt);

  Run r = run("--output " + path("e1.json") + " evaluate " + path("same.bin") + " " + path("ds1"));
  CHECK(r.status == 0);
  CHECK(r.out.find("mean_error 0.0000") != std::string::npos);
  r = run("--output " + path("e2.json") + " evaluate " + path("flip.bin") + " " + path("ds1"));
  CHECK(r.out.find("mean_error 0.0000") != std::string::npos);
  CHECK(r.out.find("flip_applied true") != std::string::npos);
  CHECK(io::read_json(kWork / "e2.json")["flip_applied"] == true);
  r = run("--output " + path("e3.json") + " evaluate " + path("scaled.bin") + " " + path("ds1"));
  CHECK(r.out.find("mean_error 0.1000") != std::string::npos);
  r = run("--output " + path("e4.json") + " evaluate " + path("rec_t") + " " + path("ds1"));
  CHECK(r.status == 0);
  const double lib = rms_error(ShapeStack(io::read_matrix(kWork / "rec_t" / "shape.bin")), *d.ground_truth).mean_error;
  CHECK(io::read_json(kWork / "e4.json")["mean_error"] == lib);
}

TEST_CASE("evaluate rejects mismatched shapes") {
  io::write_matrix(kWork / "small.bin", Dense::Ones(6, 100));
  const Run r = run("--output " + path("e5.json") + " evaluate " + path("small.bin") + " " + path("ds1"));
  CHECK(r.status != 0);
}

TEST_CASE("noise sweep writes a five by five table") {
  const Run r = run("--output " + path("sw_noise") +
                    " sweep --grid 6x6 --frames 8 --noise 0.01:0.01:0.05 --repeats 5");
  REQUIRE(r.status == 0);
  const fs::path csv = kWork / "sw_noise" / "noise.csv";
  CHECK(count_lines(csv, "cell,noise") == 5 * 5 * 4);
  CHECK(count_lines(csv, "aggregate,noise") == 5 * 4);
  CHECK(io::read_json(kWork / "sw_noise" / "noise.json")["rows"].size() == 5);
}

TEST_CASE("outlier sweep takes percentages") {
  const Run r = run("--jobs 2 --output " + path("sw_out") +
                    " sweep --grid 6x6 --frames 8 --outliers 2,4,6,8,10 --repeats 2 --methods st-l2,st-l1");
  REQUIRE(r.status == 0);
  const auto j = io::read_json(kWork / "sw_out" / "outliers.json");
  REQUIRE(j["rows"].size() == 5);
  CHECK(j["rows"][0]["level"] == 0.02);
  CHECK(j["rows"][4]["level"] == 0.1);
  CHECK(count_lines(kWork / "sw_out" / "outliers.csv", "cell,") == 5 * 2 * 2);
}

TEST_CASE("empty sweep grid gives a single clean row") {
  const Run r = run("--output " + path("sw_clean") + " sweep --grid 5x5 --frames 6");
  REQUIRE(r.status == 0);
  CHECK(io::read_json(kWork / "sw_clean" / "clean.json")["rows"].size() == 1);
}

TEST_CASE("sweeps are reproducible under a seed") {
  const std::string args = " sweep --grid 5x5 --frames 6 --outliers 4 --repeats 2";
  REQUIRE(run("--seed 3 --output " + path("sw_a") + args).status == 0);
  REQUIRE(run("--seed 3 --output " + path("sw_b") + args).status == 0);
  CHECK(bytes(kWork / "sw_a" / "outliers.csv") == bytes(kWork / "sw_b" / "outliers.csv"));
}

TEST_CASE("flags override the config file, which overrides defaults") {
  {
    std::ofstream cfg(kWork / "cfg.json");
    cfg << R"({"solver": {"lambda1": 5.0, "lambda2": 0.25}, "scene": {"frames": 7}})";
  }
  REQUIRE(run("--config " + path("cfg.json") + " --output " + path("rec_c1") + " reconstruct " +
              path("ds1") + " --method st-l2 --no-meshes").status == 0);
  auto report = io::read_json(kWork / "rec_c1" / "report.json");
  CHECK(report["config"]["lambda1"] == 5.0);
  CHECK(report["config"]["lambda2"] == 0.25);
  REQUIRE(run("--config " + path("cfg.json") + " --output " + path("rec_c2") + " reconstruct " +
              path("ds1") + " --method st-l2 --lambda1 2 --no-meshes").status == 0);
  report = io::read_json(kWork / "rec_c2" / "report.json");
  CHECK(report["config"]["lambda1"] == 2.0);
  CHECK(report["config"]["lambda2"] == 0.25);
  REQUIRE(run("--config " + path("cfg.json") + " --output " + path("ds_c") + " synthesize").status == 0);
  CHECK(io::read_dataset(kWork / "ds_c").manifest.frames == 7);
  REQUIRE(run("--config " + path("cfg.json") + " --output " + path("ds_c2") + " synthesize --frames 9").status == 0);
  CHECK(io::read_dataset(kWork / "ds_c2").manifest.frames == 9);
}

TEST_CASE("bad arguments fail cleanly") {
  CHECK(run("reconstruct " + path("nowhere")).status != 0);
  CHECK(run("reconstruct " + path("ds1") + " --method magic").status != 0);
  CHECK(run("synthesize --grid 10by10 --output " + path("bad")).status != 0);
  CHECK(run("").status != 0);
}
