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
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "nrsfm/model.hpp"
#include "nrsfm/pipeline.hpp"
#include "nrsfm/solver.hpp"
#include "nrsfm/synth.hpp"

namespace nrsfm {

struct ErrorReport {
  std::vector<double> per_frame_error;
  double mean_error = 0.0;
  bool flip_applied = false;
};

// Per-frame ||S_est,i - S_gt,i||_F / ||S_gt,i||_F after removing per-frame
// centroids, with one global depth flip of the estimate if it lowers the
// mean. No rotational alignment is applied.
ErrorReport rms_error(const ShapeStack& estimate, const ShapeStack& ground_truth);

enum class Contamination { kNone, kNoise, kOutliers };

struct SweepSetting {
  Contamination kind = Contamination::kNone;
  double level = 0.0;  // noise ratio r or outlier ratio
};

std::string setting_label(const SweepSetting& setting);

struct SweepCell {
  SweepSetting setting;
  std::uint64_t seed = 0;
  Method method = Method::kSpatialTemporalL1;
  double mean_error = 0.0;
  bool converged = true;
  // Robust-objective trace for st-l1 cells.
  std::vector<double> objective_trace;
  // Non-empty when the run threw; the cell's error is then NaN.
  std::string failure;
};

struct MethodStats {
  Method method;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
  int runs = 0;
  bool all_converged = true;
};

struct SweepRow {
  SweepSetting setting;
  std::vector<MethodStats> stats;  // one per method, in request order
};

struct SweepTable {
  std::vector<SweepCell> cells;  // ordered by setting, seed, method
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  std::vector<Method> methods = {Method::kPseudoInverse, Method::kTemporal,
                                 Method::kSpatialTemporalL2, Method::kSpatialTemporalL1};
  int repeats = 5;
  std::uint64_t first_seed = 1;  // repeats use seeds first_seed .. first_seed + repeats - 1
  int jobs = 1;
};

// Runs every method on every (setting, seed) cell of the contamination grid.
// An empty grid runs the clean scene once. Failures are recorded per cell.
SweepTable run_sweep(const Scene& scene, const std::vector<SweepSetting>& grid,
                     const SolverConfig& cfg, const SweepOptions& options);

void write_sweep_csv(const SweepTable& table, std::ostream& os);
nlohmann::json sweep_to_json(const SweepTable& table);
nlohmann::json error_report_to_json(const ErrorReport& report);

}  // namespace nrsfm
