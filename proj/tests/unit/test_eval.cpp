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

#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"

#include "nrsfm/errors.hpp"
#include "nrsfm/eval.hpp"
#include "test_support.hpp"

using namespace nrsfm;
using namespace nrsfm::testing;

namespace {

Dense depth_flipped(const Dense& s) {
  Dense out = s;
  for (Eigen::Index i = 0; i < s.rows() / 3; ++i) out.row(3 * i + 2) *= -1.0;
  return out;
}

Scene small_scene() {
  SceneSpec spec;
  spec.rows = spec.cols = 5;
  spec.frames = 6;
  return generate_scene(spec);
}

}  // namespace

TEST_CASE("identical shapes have zero error") {
  auto rng = make_rng(251);
  const ShapeStack s(random_matrix(12, 9, rng));
  const auto report = rms_error(s, s);
  CHECK(report.mean_error == 0.0);
  CHECK(report.per_frame_error.size() == 4);
  CHECK_FALSE(report.flip_applied);
}

TEST_CASE("global depth flip is resolved") {
  auto rng = make_rng(257);
  const Dense s = random_matrix(12, 9, rng);
  const auto report = rms_error(ShapeStack(depth_flipped(s)), ShapeStack(s));
  CHECK(report.mean_error < 1e-15);
  CHECK(report.flip_applied);
}

TEST_CASE("uniform scaling gives the scale error in every frame") {
  auto rng = make_rng(263);
  const Dense s = random_matrix(9, 11, rng);
  const auto report = rms_error(ShapeStack(1.1 * s), ShapeStack(s));
  for (double e : report.per_frame_error) CHECK(std::abs(e - 0.1) < 1e-12);
  CHECK(std::abs(report.mean_error - 0.1) < 1e-12);
}

TEST_CASE("per-frame error is the centered relative Frobenius distance") {
  auto rng = make_rng(269);
  const Dense est = random_matrix(6, 7, rng), gt = random_matrix(6, 7, rng);
  const auto report = rms_error(ShapeStack(est), ShapeStack(gt));
  double mean = 0.0;
  std::vector<double> plain;
  for (int i = 0; i < 2; ++i) {
    Dense e = est.middleRows(3 * i, 3), g = gt.middleRows(3 * i, 3);
    for (int r = 0; r < 3; ++r) {
      e.row(r).array() -= e.row(r).mean();
      g.row(r).array() -= g.row(r).mean();
    }
    plain.push_back((e - g).norm() / g.norm());
  }
  Dense flipped = depth_flipped(est);
  std::vector<double> flip;
  for (int i = 0; i < 2; ++i) {
    Dense e = flipped.middleRows(3 * i, 3), g = gt.middleRows(3 * i, 3);
    for (int r = 0; r < 3; ++r) {
      e.row(r).array() -= e.row(r).mean();
      g.row(r).array() -= g.row(r).mean();
    }
    flip.push_back((e - g).norm() / g.norm());
  }
  const double mp = (plain[0] + plain[1]) / 2, mf = (flip[0] + flip[1]) / 2;
  mean = std::min(mp, mf);
  CHECK(report.mean_error == doctest::Approx(mean).epsilon(1e-12));
  CHECK(report.flip_applied == (mf < mp));
  double sum = 0.0;
  for (double e : report.per_frame_error) {
    CHECK(e >= 0.0);
    sum += e;
  }
  CHECK(report.mean_error == doctest::Approx(sum / 2).epsilon(1e-14));
}

TEST_CASE("error is invariant to translations and the depth flip") {
  auto rng = make_rng(271);
  const Dense gt = random_matrix(9, 8, rng);
  const Dense est = gt + 0.05 * random_matrix(9, 8, rng);
  const double base = rms_error(ShapeStack(est), ShapeStack(gt)).mean_error;
  const Dense shift_est = est + random_matrix(9, 1, rng).replicate(1, 8);
  const Dense shift_gt = gt + random_matrix(9, 1, rng).replicate(1, 8);
  CHECK(rms_error(ShapeStack(shift_est), ShapeStack(shift_gt)).mean_error ==
        doctest::Approx(base).epsilon(1e-12));
  CHECK(rms_error(ShapeStack(depth_flipped(est)), ShapeStack(gt)).mean_error ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("rms_error rejects bad inputs") {
  CHECK_THROWS_AS(rms_error(ShapeStack(Matrix::Ones(3, 4)), ShapeStack(Matrix::Ones(3, 4))),
                  NormalizationError);
  CHECK_THROWS_AS(rms_error(ShapeStack(Matrix::Ones(6, 4)), ShapeStack(Matrix::Ones(3, 4))),
                  ShapeError);
}

TEST_CASE("empty contamination grid yields one clean row") {
  const Scene scene = small_scene();
  SweepOptions options;
  const auto table = run_sweep(scene, {}, SolverConfig{}, options);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].setting.kind == Contamination::kNone);
  CHECK(table.rows[0].stats.size() == 4);
  CHECK(table.cells.size() == 4);
  for (const auto& st : table.rows[0].stats) CHECK(st.runs == 1);
}

TEST_CASE("noise sweep has one cell per setting, seed and method") {
  const Scene scene = small_scene();
  std::vector<SweepSetting> grid;
  for (int k = 1; k <= 5; ++k) grid.push_back({Contamination::kNoise, 0.01 * k});
  SweepOptions options;
  const auto table = run_sweep(scene, grid, SolverConfig{}, options);
  CHECK(table.rows.size() == 5);
  CHECK(table.cells.size() == 5 * 5 * 4);
  for (const auto& row : table.rows) {
    REQUIRE(row.stats.size() == 4);
    for (size_t m = 0; m < 4; ++m) {
      CHECK(row.stats[m].runs == 5);
      CHECK(row.stats[m].method == options.methods[m]);
      std::vector<double> values;
      for (const auto& c : table.cells) {
        if (c.setting.level == row.setting.level && c.method == row.stats[m].method) {
          values.push_back(c.mean_error);
        }
      }
      REQUIRE(values.size() == 5);
      double mean = 0.0;
      for (double v : values) mean += v / 5.0;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      CHECK(row.stats[m].mean == doctest::Approx(mean).epsilon(1e-12));
      CHECK(row.stats[m].stddev == doctest::Approx(std::sqrt(ss / 4.0)).epsilon(1e-9));
    }
  }
  std::set<std::uint64_t> seeds;
  for (const auto& c : table.cells) seeds.insert(c.seed);
  CHECK(seeds == std::set<std::uint64_t>{1, 2, 3, 4, 5});
}

TEST_CASE("parallel sweeps match serial sweeps exactly") {
  const Scene scene = small_scene();
  std::vector<SweepSetting> grid = {{Contamination::kOutliers, 0.04}, {Contamination::kNoise, 0.02}};
  SweepOptions serial;
  serial.repeats = 3;
  SweepOptions parallel = serial;
  parallel.jobs = 4;
  const auto a = run_sweep(scene, grid, SolverConfig{}, serial);
  const auto b = run_sweep(scene, grid, SolverConfig{}, parallel);
  REQUIRE(a.cells.size() == b.cells.size());
  for (size_t k = 0; k < a.cells.size(); ++k) {
    CHECK(a.cells[k].mean_error == b.cells[k].mean_error);
    CHECK(a.cells[k].objective_trace == b.cells[k].objective_trace);
  }
  std::ostringstream ca, cb;
  write_sweep_csv(a, ca);
  write_sweep_csv(b, cb);
  CHECK(ca.str() == cb.str());
}

TEST_CASE("failing cells are recorded without aborting the sweep") {
  Scene scene = small_scene();
  // Shared viewing direction makes the temporal methods singular.
  CameraBlock id = CameraBlock::Zero();
  id(0, 0) = id(1, 1) = 1.0;
  scene.rotations = assemble_rotation(std::vector<CameraBlock>(6, id));
  scene.tracks = reproject(scene.rotations, scene.ground_truth);
  SweepOptions options;
  options.repeats = 2;
  const auto table = run_sweep(scene, {{Contamination::kNoise, 0.01}}, SolverConfig{}, options);
  CHECK(table.cells.size() == 8);
  int failures = 0;
  for (const auto& c : table.cells) {
    if (c.method == Method::kPseudoInverse) {
      CHECK(c.failure.empty());
      CHECK(std::isfinite(c.mean_error));
    } else {
      CHECK_FALSE(c.failure.empty());
      CHECK(std::isnan(c.mean_error));
      CHECK_FALSE(c.converged);
      ++failures;
    }
  }
  CHECK(failures == 6);
  CHECK(table.rows[0].stats[0].runs == 2);
  CHECK(table.rows[0].stats[1].runs == 0);
  CHECK(std::isnan(table.rows[0].stats[1].mean));
}

TEST_CASE("sweep tables serialize to CSV and JSON") {
  const Scene scene = small_scene();
  SweepOptions options;
  options.repeats = 2;
  options.methods = {Method::kTemporal, Method::kSpatialTemporalL1};
  const auto table = run_sweep(scene, {{Contamination::kOutliers, 0.02}}, SolverConfig{}, options);
  std::ostringstream os;
  write_sweep_csv(table, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "record,contamination,level,seed,method,mean_error,stddev,runs,converged,failure");
  int cells = 0, aggregates = 0;
  while (std::getline(is, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 9);
    if (line.rfind("cell,", 0) == 0) ++cells;
    if (line.rfind("aggregate,", 0) == 0) ++aggregates;
  }
  CHECK(cells == 4);
  CHECK(aggregates == 2);
  const auto j = sweep_to_json(table);
  CHECK(j["rows"].size() == 1);
  CHECK(j["rows"][0]["methods"].contains("st-l1"));
  CHECK(j["cells"].size() == 4);
  CHECK(setting_label({Contamination::kOutliers, 0.02}) == "outliers:0.02");
  CHECK(setting_label({}) == "clean");
}
