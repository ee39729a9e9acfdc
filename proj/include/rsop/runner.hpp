#pragma once

// Batch experiment orchestration behind the command-line tool. Each kind reads a
// scenario, runs the relevant modules and writes schema-checked CSV files plus a
// manifest.json into the output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsop/adaptive.hpp"
#include "rsop/scenario.hpp"
#include "rsop/simulator.hpp"

namespace rsop {

struct ExperimentSpec {
  std::string kind;  // empty: the scenario's own kind
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::int64_t> slots;
  std::optional<int> grid;  // steps per axis for the optimizer grid
  std::optional<Protocol> protocol;
  std::optional<Algorithm> algorithm;
  std::filesystem::path out_dir = "out";
  int parallelism = 1;
};

struct ExperimentResult {
  std::string kind;
  std::vector<std::filesystem::path> files;
  std::string summary;  // human-readable lines for the console
};

const std::vector<std::string>& experiment_kinds();

/// Applies the command-line overrides to a parsed scenario.
Scenario apply_overrides(Scenario scenario, const ExperimentSpec& spec);

ExperimentResult run_experiment(const ExperimentSpec& spec);
/// Same, with the scenario already loaded (overrides are still applied).
ExperimentResult run_experiment(const ExperimentSpec& spec, const Scenario& scenario);

}  // namespace rsop
