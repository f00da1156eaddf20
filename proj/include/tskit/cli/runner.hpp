#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tskit/cli/config.hpp"

namespace tskit::cli {

struct RunReport {
  std::string task;
  std::string model;
  double wall_seconds = 0.0;
  /// Timestepper counter delta over the whole task.
  std::uint64_t map_calls = 0;
  std::string status;
  bool success = false;
  /// Ordered headline numbers, already formatted.
  std::vector<std::pair<std::string, std::string>> headline;
  std::vector<std::string> csv_paths;

  /// Fixed-point tasks: the solution, the tolerance it was computed to and
  /// the parameters it belongs to. Used by compare_runs.
  std::optional<StateVector> fixed_point;
  double tolerance = 0.0;
  std::vector<std::pair<std::string, double>> parameters;

  std::string to_text() const;
};

/// Executes the configured task, writes its CSVs under output.directory
/// (created if missing) and returns the report. Task-level failures from
/// the numerical modules propagate as tskit::Error.
RunReport run_task(const RunConfig& config);

struct SpeedupSummary {
  double speedup = 0.0;
  double fixed_point_distance = 0.0;
  double bound = 0.0;
};

/// speedup = calls(b) / calls(a), after checking both runs reached the same
/// fixed point within 10x the looser tolerance at identical parameters.
SpeedupSummary compare_runs(const RunReport& a, const RunReport& b);

}  // namespace tskit::cli
