#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tskit/continuation.hpp"
#include "tskit/projective.hpp"
#include "tskit/rpm.hpp"
#include "tskit/timestepper.hpp"

namespace tskit::cli {

enum class ModelKind { LinearMap, QuadraticMap, ForcedOscillator, AdsorptionColumn };

std::string to_string(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::LinearMap;

  // linear_map
  std::vector<double> eigenvalues;
  std::vector<std::pair<double, double>> complex_pairs;
  std::optional<std::vector<double>> offset;
  std::optional<std::vector<double>> fixed_point;
  std::optional<std::uint64_t> conjugation_seed;
  std::optional<int> lambda_slot;

  // quadratic_map
  int dimension = 1;

  // forced_oscillator
  int n_steps = 800;

  // adsorption_column
  int n_z = 90;
  double length = 1.0;
  double dt = 0.005;

  /// Overrides of the model's named parameters.
  std::map<std::string, double> parameters;
  /// Start state; a single entry is broadcast to the full dimension.
  std::optional<std::vector<double>> initial_state;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Mirror of RpmOptions with value semantics.
struct RpmSettings {
  double tolerance = 1e-6;
  int max_iterations = 1000;
  int max_basis = 10;
  double grow_threshold = 0.5;
  double drop_threshold = 0.01;
  int history_length = 4;
  int warmup_iterations = 3;
  int refresh_interval = 5;

  RpmOptions to_options() const;
  friend bool operator==(const RpmSettings&, const RpmSettings&) = default;
};

struct SimulateTask {
  int n_cycles = 10;
  /// Intra-cycle samples written per cycle (0 = end-of-cycle states only).
  int samples_per_cycle = 0;
  friend bool operator==(const SimulateTask&, const SimulateTask&) = default;
};

enum class FixedPointMethod { Rpm, Direct };

struct FixedPointTask {
  FixedPointMethod method = FixedPointMethod::Rpm;
  RpmSettings rpm;
  /// Plain cycles run before the solver starts (counted in the report).
  int warm_cycles = 0;
  /// Cycle budget for method = direct.
  int max_cycles = 100000;
  friend bool operator==(const FixedPointTask&, const FixedPointTask&) = default;
};

struct EigsTask {
  int k = 10;
  double stability_margin = 1e-8;
  /// Converge to the fixed point with RPM before the Arnoldi run.
  bool solve_first = true;
  RpmSettings rpm;
  /// "ones" (default), "random" (uses the run seed) or an explicit vector.
  std::string start = "ones";
  std::vector<double> start_vector;
  friend bool operator==(const EigsTask&, const EigsTask&) = default;
};

struct ContinueTask {
  std::string parameter = "lambda";
  double lambda_min = 0.0;
  double lambda_max = 1.0;
  double step = 0.01;
  double step_min = 1e-6;
  double fold_step = 1e-3;
  double step_max = 0.05;
  int max_points = 400;
  int max_corrector_iterations = 30;
  double tolerance = 1e-8;
  double theta = 0.5;
  int arnoldi_steps = 0;
  /// Leading multipliers written per branch point.
  int multipliers = 2;
  bool refine_folds = true;
  RpmSettings rpm;
  friend bool operator==(const ContinueTask&, const ContinueTask&) = default;
};

struct ProjectiveTask {
  int inner_steps = 3;
  int jump = 9;
  int max_rounds = 10000;
  double tolerance = 1e-6;
  bool adaptive = false;
  int chord_points = 2;
  ProjectiveSchedule to_schedule() const;
  friend bool operator==(const ProjectiveTask&, const ProjectiveTask&) = default;
};

using TaskConfig = std::variant<SimulateTask, FixedPointTask, EigsTask, ContinueTask, ProjectiveTask>;

std::string task_name(const TaskConfig& task);

struct OutputConfig {
  std::string directory = ".";
  std::string prefix = "tskit";
  /// Write every stride-th state entry.
  int stride = 1;
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  ModelConfig model;
  TaskConfig task;
  OutputConfig output;
  std::uint64_t seed = 0;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses YAML text. Unknown keys, wrong types and missing sections raise
/// ConfigError with the offending line and column.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical YAML with every field spelled out; parse_config accepts it.
std::string serialize_config(const RunConfig& config);

/// Named parameters each model kind accepts.
std::vector<std::string> known_parameters(ModelKind kind);

std::unique_ptr<Timestepper> build_model(const ModelConfig& config);
/// Model defaults with the configured overrides applied.
Parameters build_parameters(const Timestepper& model, const ModelConfig& config);
StateVector build_initial_state(const Timestepper& model, const ModelConfig& config);

}  // namespace tskit::cli
