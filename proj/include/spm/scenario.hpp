#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spm/potential.hpp"
#include "spm/report.hpp"
#include "spm/weights.hpp"

namespace spm {

struct ScenarioConfig {
  std::string scenario = "scenario";
  int n = 1;
  double L = 12;
  int M = 64;
  PotentialSpec potential;
  std::string symbol = "identity";
  std::string partition = "bump-integral-v1";
  /// unit, power, shifted_power
  std::string weight_kind = "shifted_power";
  std::vector<double> weight_exponents{0, 0.25, 0.5, 0.75, 1, 1.25};
  /// b for commutator studies: bump, linear-bump, constant.
  std::string b = "bump";
  double p = 2, r = 1, p0 = 1, theta = 0, N = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> studies;

  // study sizes
  int pieces = 4;
  std::size_t random_cubes = 200;
  std::size_t sparse_functions = 20;
  int sparse_level = 2;
  double alpha = 3;
  std::size_t probe_budget = 32;
  std::size_t shen_pairs = 10000;
  std::vector<double> A_grid, t_grid, gamma_grid;

  /// Resolved configuration echoed into the report.
  Json echo;
};

/// Parses the key/value tree; unresolved catalog ids raise a Config error naming the id.
ScenarioConfig parse_config(const Json& j, std::optional<std::uint64_t> seed_override = std::nullopt);
ScenarioConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

std::vector<std::string> study_catalog();

/// One study; numerical failures propagate as spm::Error.
StudyReport run_study(const ScenarioConfig& cfg, const std::string& study);

struct ScenarioOutcome {
  StudyReport report;
  std::vector<std::pair<std::string, StudyReport>> studies;
  int exit_code = 0;
};

/// Runs the requested studies (all of cfg.studies when `only` is empty). A study that
/// throws is marked failed and the run continues.
ScenarioOutcome run_scenario(const ScenarioConfig& cfg, const std::vector<std::string>& only = {});

/// Writes <dir>/<scenario>.json and <dir>/<scenario>_<study>.csv.
void write_outputs(const ScenarioOutcome& outcome, const std::string& scenario, const std::filesystem::path& dir);

}  // namespace spm
