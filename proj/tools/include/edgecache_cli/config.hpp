#pragma once

// Run configuration: one JSON document with `deployment`, `providers`,
// `experiment` and `output` sections. Unknown keys are rejected and every
// error carries a JSON pointer to the offending value.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgecache/equilibrium.hpp"
#include "edgecache/spatial.hpp"

namespace edgecache::cli {

/// Either an explicit list or lo:hi:steps with linear or log spacing.
struct GridSpec {
  std::vector<double> values;
  double lo = 0.0;
  std::optional<double> hi;  ///< unset: command default
  std::size_t steps = 0;
  bool log_spacing = false;
  bool include_zero = false;
  bool hi_at_zero_threshold = false;

  bool explicit_values() const noexcept { return steps == 0; }
  std::vector<double> expand(double default_hi) const;
};

/// Parses "lo:hi:steps".
GridSpec parse_grid_flag(const std::string& text, const std::string& what);

enum class InitialProfile { Zero, Caps, Equilibrium, Explicit };

struct DynamicsSpec {
  InitialProfile initial = InitialProfile::Zero;
  std::vector<double> initial_rates;
  std::size_t max_rounds = 500;
  double tolerance = 1e-9;
  PlayerOrder order = PlayerOrder::RoundRobin;
};

struct SimulationSpec {
  Region region{0.0, 0.0, 2.0, 3.0};
  std::optional<std::filesystem::path> dataset;
  Projection projection = Projection::PlanarXY;
  std::vector<double> radii{0.05, 0.1, 0.2, 0.3, 0.4};
  std::size_t trials = 10000;
  std::size_t poisson_deployments = 0;
  std::size_t shard_size = 4096;
};

struct ExperimentSpec {
  std::uint64_t seed = 0;
  std::size_t player = 0;
  std::optional<double> b_c;
  double b_opp = 0.0;
  std::vector<double> b_opp_values;
  std::optional<GridSpec> bc_grid;
  std::optional<GridSpec> lambda_grid;
  std::size_t bracket_subdivisions = 1;
  DynamicsSpec dynamics;
  SimulationSpec simulation;
};

/// Tabular outputs only; reports are always JSON.
enum class OutputFormat { Csv, Json };

struct OutputSpec {
  std::optional<std::filesystem::path> directory;
  OutputFormat format = OutputFormat::Csv;
};

struct RunConfig {
  nlohmann::json document;
  std::string hash;  ///< FNV-1a 64 of the canonical dump, hex
  /// Availabilities are explicit or derived from deployment.radius. When a
  /// class needs derivation but no radius is set, `availability_resolved` is
  /// false and only `simulate` (which derives per radius) can run.
  GameConfig game;
  bool availability_resolved = true;
  ExperimentSpec experiment;
  OutputSpec output;
};

/// Throws ConfigError on any schema or invariant violation.
/// Relative dataset paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir = {});
/// Throws IoError if unreadable, ConfigError if not JSON or invalid.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace edgecache::cli
