#pragma once

#include "sinrlab/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sinrlab {

/// Invalid or inconsistent experiment configuration (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Result files could not be written (exit status 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { solve, simulate, meta, stability, sweep, compare };
std::string to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string& name);

/// One sweep axis; several axes form a Cartesian product, first axis
/// outermost.
struct SweepAxis {
  std::string name;  // theta_db, xi, lambda or r
  std::vector<double> values;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::solve;
  RawParams params = RawParams::reference();
  std::vector<SweepAxis> sweep;

  // Simulation knobs.
  long slots = 10000;
  long warmup = 1000;
  int realizations = 20;
  std::uint64_t seed = 1;
  Region region;
  long min_attempts = 50;
  int activity_bins = 0;  // > 0 writes conditional-activity curves
  bool save_runs = false; // per-realisation SimStats JSON

  // Meta distribution.
  int grid_size = 201;
  bool meta_simulate = false;
  bool meta_beta = true;

  // Stability.
  std::vector<double> epsilons{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};

  // Sweep kind: add meta-derived columns (variance, 95%-likely rate).
  bool sweep_meta = false;

  std::filesystem::path out = "out";
  unsigned jobs = 1;

  /// Resolved configuration as JSON text, recorded in the manifest.
  std::string to_json() const;
};

/// Parses a JSON configuration after applying `overrides` ("key=value",
/// dotted keys address nested objects; bare parameter names address
/// params.*). The value is read as JSON when it parses, else as a string.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& file,
                             const std::vector<std::string>& overrides = {});

struct ExperimentOutcome {
  bool converged = true;
  std::size_t rows = 0;
  std::vector<std::filesystem::path> files;
  double wall_seconds = 0.0;

  int exit_code() const { return converged ? 0 : 3; }
};

/// Runs the experiment and writes results.csv, manifest.json and any curve
/// files under config.out. Rows follow sweep order whatever the worker count.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

}  // namespace sinrlab
