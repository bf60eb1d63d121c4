#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qam/analysis.hpp"
#include "qam/error.hpp"
#include "qam/grid.hpp"
#include "qam/kinematics.hpp"
#include "qam/potential.hpp"

namespace qam {

inline constexpr const char* kToolVersion = "1.0.0";

enum class ScenarioKind { coherent_oscillator, stationary_ground, barrier_tunneling, custom_potential };

std::string to_string(ScenarioKind kind);

/// Validated scenario. Every field has a default so that a config naming only the
/// kind is complete.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::coherent_oscillator;
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::vector<std::string> analyses;
  std::string output_dir;  // empty: decided by the caller

  PhysicalParams params;
  double omega = 1.0;
  std::vector<double> n_mean{0.0};

  GridSpec grid = build_grid(-8.0, 8.0, 801, 1e-3);

  bool potential_given = false;
  Potential potential = Potential::harmonic(1.0, 1.0);

  double dt_sde = 1e-3;
  std::size_t n_paths = 2000;
  double t_start = 0.0;
  double t_end = 10.0;
  std::size_t record_every = 10;
  BoundaryPolicy boundary = BoundaryPolicy::reflect;
  bool backward = false;  // also sample the time-reversed ensemble

  double packet_x0 = -10.0;
  double packet_sigma = 1.0;
  double packet_k0 = 1.5;
  std::size_t store_every = 10;

  std::size_t density_bins = 60;
  std::size_t sample_paths = 8;
  double max_lag = 3.0;
  std::size_t segment_length = 256;
  std::size_t overlap = 128;
  std::size_t fields_stride = 1;
  bool region_given = false;
  Region region = Region::above(0.7071067811865476);
  std::vector<PassageSense> senses{PassageSense::enter};

  double e_lo = 0.0;
  double e_hi = 2.0;
  std::size_t verify_paths = 20000;
  double verify_horizon = 10.0;

  double ks_max = 0.03;
  double residual_max = 1e-6;

  std::string source;  // the text this config was parsed from
};

/// Raised by parse_config with every problem found, not only the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Strict INI parser: [section] headers, key = value lines, # or ; comments.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

struct GateResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct Artifact {
  std::string file;
  std::string content;
};

struct RunResult {
  std::vector<Artifact> artifacts;
  std::vector<GateResult> gates;
  std::string field_checksum;

  bool passed() const;
};

/// Runs the whole pipeline in memory; nothing touches the filesystem.
RunResult run_scenario(const ScenarioConfig& config);

/// Analyses that act on a ready ensemble (density, autocorrelation, psd, fpt, trajectories).
std::vector<Artifact> analyze_ensemble(const TrajectoryEnsemble& ensemble, const ScenarioConfig& config,
                                       const std::string& prefix);

struct ManifestOutput {
  std::string file;
  std::string checksum;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::string scenario;
  std::string kind;
  std::uint64_t seed = 0;
  std::string config;
  std::string field_checksum;
  std::string version = kToolVersion;
  double wall_clock_seconds = 0.0;
  int threads = 1;
  std::vector<GateResult> gates;
  bool passed = false;
  std::vector<ManifestOutput> outputs;

  std::string to_json() const;
  static RunManifest from_json(std::string_view text);
};

RunManifest make_manifest(const ScenarioConfig& config, const RunResult& result, double wall_clock_seconds,
                          int threads);

inline constexpr const char* kManifestFile = "manifest.json";

/// Writes every artifact, then the manifest. On failure the files already written are
/// removed and the error is rethrown.
std::vector<std::filesystem::path> emit_outputs(const RunResult& result, const RunManifest& manifest,
                                                const std::filesystem::path& dir);

}  // namespace qam
