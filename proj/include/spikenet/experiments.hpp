#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spikenet/core.hpp"
#include "spikenet/sampling.hpp"

namespace spikenet {

inline constexpr const char* kArtifactVersion = "1.0.0";
/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "SPIKENET_OUT";

/// Registered scenario names.
const std::vector<std::string>& scenario_names();

/// One run, parsed from a JSON document. Everything not set keeps the
/// default below; scenario-specific requirements are checked by
/// `validate_config`.
struct ExperimentConfig {
  std::string scenario;
  ModelParams params{1.0, 1.0, 2, 1.0};
  std::string benchmark;  // empty when params were given explicitly
  InitLaw init = InitLaw::constant(1.0);
  std::size_t n = 100;
  std::vector<std::size_t> n_list;
  double horizon = 10.0;
  double dt = 0.01;
  std::size_t replicas = 200;
  std::size_t paths = 10000;
  std::size_t ensemble_paths = 0;
  std::size_t particles = 10000;
  std::vector<double> eval_times;
  std::vector<double> gamma_grid;
  std::size_t tracked = 0;  // 0 means all N neurons
  std::vector<std::size_t> coupling_n_list;
  double coupling_horizon = 2.0;
  double coupling_table_dt = 0.05;
  std::size_t oracle_replicates = 8;
  double picard_tol = 0.0;  // 0 selects twice the noise floor
  std::uint64_t seed = 1;
  std::string output_dir;
  unsigned workers = 1;
  std::string format = "csv";
};

/// Parses and validates; throws Error(ConfigError) naming the field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate_config(const ExperimentConfig& config);
/// Canonical JSON echo (sorted keys) of a config.
std::string config_to_json(const ExperimentConfig& config);

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunManifest {
  std::string scenario;
  std::filesystem::path output_dir;
  std::vector<std::string> files;
  std::vector<Assertion> assertions;
  std::string summary_json;  // per-scenario statistics
  double wall_clock_seconds = 0.0;

  bool all_passed() const noexcept;
  /// Full manifest document as written to manifest.json.
  std::string to_json(const ExperimentConfig& config) const;
};

/// Output directory: the config's, else $SPIKENET_OUT/<scenario>-<seed>,
/// else ./spikenet-out/<scenario>-<seed>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// Runs one scenario. Result files and manifest.json are written into a
/// temporary sibling directory that replaces the output directory at the end.
RunManifest run_scenario(const ExperimentConfig& config);

}  // namespace spikenet
