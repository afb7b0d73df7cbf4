#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "app/config.hpp"
#include "core/evolution.hpp"
#include "core/subsystem.hpp"
#include "core/trajectory.hpp"

namespace paleo::app {

enum class TrajectoryKind { none, classical, bohmian, nelsonian };

/// A validated scenario: everything needed to run, resolved from a Config.
struct Scenario {
  Config config;
  std::string name;
  std::vector<std::string> analyses;
  std::uint64_t seed = 1;

  Grid grid;
  EvolutionConfig evolution;
  PotentialSpec potential;
  WaveField psi0;

  TrajectoryKind trajectories = TrajectoryKind::none;
  std::size_t walkers = 0;

  /// Set for state.kind = product: the two line factors and their potentials.
  std::optional<std::pair<WaveField, WaveField>> factors;
  std::pair<PotentialSpec, PotentialSpec> factor_potentials;
  /// Set for state.kind = bipartite.
  std::optional<BipartiteScenario> bipartite;

  bool wants(const std::string& analysis) const;
};

/// Schema-level parse is done by Config; this resolves types and applies the
/// cross-field rules. Throws config errors.
Scenario build_scenario(const Config& cfg);

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  /// "le": value <= tolerance; "ge": value >= tolerance.
  std::string relation = "le";
  std::string note;
};

struct Outcome {
  Run run;
  TrajectorySet trajectories;
  bool has_trajectories = false;
  std::optional<MeasurementReport> measurement;
  std::vector<Check> checks;
  /// Extra numbers worth keeping, "section.key" = value.
  std::vector<std::pair<std::string, std::string>> values;
  std::string error;  // set when an analysis raised a contract error

  bool passed() const;
};

/// Evolves, integrates walkers and runs every requested analysis. A contract
/// violation inside an analysis is recorded as a failed check, not thrown.
Outcome execute(const Scenario& s);

}  // namespace paleo::app
