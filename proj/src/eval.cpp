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

#include "nrsfm/eval.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace nrsfm {

namespace {

double mean_frame_error(const ShapeStack& estimate, const ShapeStack& ground_truth,
                        bool flip, std::vector<double>& per_frame) {
  per_frame.assign(ground_truth.frames(), 0.0);
  for (int i = 0; i < ground_truth.frames(); ++i) {
    Matrix est = estimate.frame(i);
    if (flip) est.row(2) *= -1.0;
    Matrix gt = ground_truth.frame(i);
    est.colwise() -= est.rowwise().mean();
    gt.colwise() -= gt.rowwise().mean();
    const double norm = gt.norm();
    if (!(norm > 0.0)) {
      throw NormalizationError("ground-truth frame " + std::to_string(i) +
                               " has zero norm after centering");
    }
    per_frame[i] = (est - gt).norm() / norm;
  }
  double sum = 0.0;
  for (const double e : per_frame) sum += e;
  return sum / static_cast<double>(per_frame.size());
}

std::vector<SweepSetting> expand_grid(const std::vector<SweepSetting>& grid) {
  if (grid.empty()) return {SweepSetting{}};
  return grid;
}

const char* kind_name(Contamination kind) {
  switch (kind) {
    case Contamination::kNone: return "clean";
    case Contamination::kNoise: return "noise";
    case Contamination::kOutliers: return "outliers";
  }
  return "unknown";
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << value;
  return os.str();
}

}  // namespace

ErrorReport rms_error(const ShapeStack& estimate, const ShapeStack& ground_truth) {
  if (estimate.frames() != ground_truth.frames() || estimate.points() != ground_truth.points()) {
    throw ShapeError("estimate is " + std::to_string(estimate.data().rows()) + " x " +
                     std::to_string(estimate.points()) + " but ground truth is " +
                     std::to_string(ground_truth.data().rows()) + " x " +
                     std::to_string(ground_truth.points()));
  }
  ErrorReport plain;
  plain.mean_error = mean_frame_error(estimate, ground_truth, false, plain.per_frame_error);
  ErrorReport flipped;
  flipped.flip_applied = true;
  flipped.mean_error = mean_frame_error(estimate, ground_truth, true, flipped.per_frame_error);
  return flipped.mean_error < plain.mean_error ? flipped : plain;
}

std::string setting_label(const SweepSetting& setting) {
  std::ostringstream os;
  os << kind_name(setting.kind);
  if (setting.kind != Contamination::kNone) os << ":" << setting.level;
  return os.str();
}

SweepTable run_sweep(const Scene& scene, const std::vector<SweepSetting>& grid,
                     const SolverConfig& cfg, const SweepOptions& options) {
  cfg.validate();
  if (options.repeats < 1) throw DataValidationError("sweep needs at least one repeat");
  if (options.methods.empty()) throw DataValidationError("sweep needs at least one method");

  const std::vector<SweepSetting> settings = expand_grid(grid);
  struct Task {
    SweepSetting setting;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& s : settings) {
    // A clean cell is deterministic, so it runs once.
    const int repeats = s.kind == Contamination::kNone ? 1 : options.repeats;
    for (int k = 0; k < repeats; ++k) tasks.push_back({s, options.first_seed + k});
  }

  const size_t per_task = options.methods.size();
  SweepTable table;
  table.cells.resize(tasks.size() * per_task);

  auto run_task = [&](size_t t) {
    const Task& task = tasks[t];
    TrackMatrix tracks = scene.tracks;
    std::string contamination_failure;
    try {
      if (task.setting.kind == Contamination::kNoise) {
        tracks = inject_noise(scene.tracks, task.setting.level, task.seed);
      } else if (task.setting.kind == Contamination::kOutliers) {
        tracks = inject_outliers(scene.tracks, task.setting.level, task.seed).tracks;
      }
    } catch (const std::exception& e) {
      contamination_failure = e.what();
    }
    for (size_t m = 0; m < per_task; ++m) {
      SweepCell& cell = table.cells[t * per_task + m];
      cell.setting = task.setting;
      cell.seed = task.seed;
      cell.method = options.methods[m];
      if (!contamination_failure.empty()) {
        cell.failure = contamination_failure;
        cell.mean_error = std::numeric_limits<double>::quiet_NaN();
        cell.converged = false;
        continue;
      }
      try {
        const Reconstruction rec =
            reconstruct(cell.method, tracks, scene.rotations, scene.topology, cfg);
        cell.mean_error = rms_error(rec.shape, scene.ground_truth).mean_error;
        if (rec.report) {
          cell.converged = rec.report->converged && rec.report->subproblems_converged;
          if (cell.method == Method::kSpatialTemporalL1) {
            cell.objective_trace = rec.report->objective_trace;
          }
        }
      } catch (const std::exception& e) {
        cell.failure = e.what();
        cell.mean_error = std::numeric_limits<double>::quiet_NaN();
        cell.converged = false;
      }
    }
  };

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    for (size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (size_t t = next++; t < tasks.size(); t = next++) run_task(t);
      });
    }
    for (auto& w : workers) w.join();
  }

  // Aggregate per setting in grid order.
  size_t cursor = 0;
  for (const auto& s : settings) {
    SweepRow row{s, {}};
    const int repeats = s.kind == Contamination::kNone ? 1 : options.repeats;
    for (size_t m = 0; m < per_task; ++m) {
      MethodStats stats{options.methods[m]};
      double sum = 0.0;
      std::vector<double> values;
      for (int k = 0; k < repeats; ++k) {
        const SweepCell& cell = table.cells[(cursor + k) * per_task + m];
        stats.all_converged = stats.all_converged && cell.converged;
        if (cell.failure.empty()) {
          values.push_back(cell.mean_error);
          sum += cell.mean_error;
        }
      }
      stats.runs = static_cast<int>(values.size());
      if (values.empty()) {
        stats.mean = stats.stddev = std::numeric_limits<double>::quiet_NaN();
      } else {
        stats.mean = sum / values.size();
        double ss = 0.0;
        for (const double v : values) ss += (v - stats.mean) * (v - stats.mean);
        stats.stddev = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
      }
      row.stats.push_back(stats);
    }
    cursor += repeats;
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_sweep_csv(const SweepTable& table, std::ostream& os) {
  os << "record,contamination,level,seed,method,mean_error,stddev,runs,converged,failure\n";
  for (const auto& c : table.cells) {
    os << "cell," << kind_name(c.setting.kind) << ',' << format_number(c.setting.level) << ','
       << c.seed << ',' << method_name(c.method) << ',' << format_number(c.mean_error)
       << ",,1," << (c.converged ? 1 : 0) << ',';
    // Failure text is quoted; embedded quotes are doubled.
    if (!c.failure.empty()) {
      os << '"';
      for (const char ch : c.failure) os << (ch == '"' ? "\"\"" : std::string(1, ch));
      os << '"';
    }
    os << '\n';
  }
  for (const auto& r : table.rows) {
    for (const auto& s : r.stats) {
      os << "aggregate," << kind_name(r.setting.kind) << ',' << format_number(r.setting.level)
         << ",," << method_name(s.method) << ',' << format_number(s.mean) << ','
         << format_number(s.stddev) << ',' << s.runs << ',' << (s.all_converged ? 1 : 0)
         << ",\n";
    }
  }
}

nlohmann::json sweep_to_json(const SweepTable& table) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& s : r.stats) {
      methods[std::string(method_name(s.method))] = {{"mean", num(s.mean)},
                                                     {"stddev", num(s.stddev)},
                                                     {"runs", s.runs},
                                                     {"all_converged", s.all_converged}};
    }
    rows.push_back({{"contamination", kind_name(r.setting.kind)},
                    {"level", r.setting.level},
                    {"methods", methods}});
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : table.cells) {
    nlohmann::json cell = {{"contamination", kind_name(c.setting.kind)},
                           {"level", c.setting.level},
                           {"seed", c.seed},
                           {"method", method_name(c.method)},
                           {"mean_error", num(c.mean_error)},
                           {"converged", c.converged}};
    if (!c.failure.empty()) cell["failure"] = c.failure;
    cells.push_back(std::move(cell));
  }
  return {{"rows", rows}, {"cells", cells}};
}

nlohmann::json error_report_to_json(const ErrorReport& report) {
  return {{"mean_error", report.mean_error},
          {"per_frame_error", report.per_frame_error},
          {"flip_applied", report.flip_applied}};
}

}  // namespace nrsfm
