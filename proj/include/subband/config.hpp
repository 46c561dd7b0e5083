#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "subband/eval.hpp"
#include "subband/ggnn.hpp"
#include "subband/scenario.hpp"

namespace subband {

/// Resolved settings for every command.
///
/// Layering: built-in scale defaults ("desk" or "full"), then the scenario
/// presets, then values from the config file, then command-line overrides.
struct RunConfig {
  std::string scale = "desk";
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  int workers = 0;  // 0 = all available cores
  std::string scenario = "default";
  std::map<std::string, Scenario> scenarios;
  GgnnConfig model;
  TrainerConfig trainer;
  EvalConfig eval;
  RuntimeSweepConfig bench;
  std::vector<std::string> bench_allocators{"ra", "cgc", "sisa", "ggnn"};
  std::filesystem::path dataset_dir;
  std::filesystem::path model_path;
  std::vector<std::string> generalization_scenarios{"default", "scenario1", "scenario2"};
  /// Pre-trained model per training scenario; missing entries are trained.
  std::map<std::string, std::filesystem::path> generalization_models;

  /// Desk scale: 2,000 training graphs, 100 epochs, 1,000 test snapshots.
  static RunConfig desk();
  /// Full scale: 50,000 graphs, 500 epochs, 10,000 test snapshots.
  static RunConfig full();

  const Scenario& active_scenario() const;
  const Scenario& scenario_named(const std::string& name) const;
  /// Model config with K taken from the named scenario.
  GgnnConfig model_for(const Scenario& scenario) const;
  int resolved_workers() const;
  /// Cross-field checks; throws Error(kConfig).
  void validate() const;
};

/// Parses YAML text. Errors carry `source:line:column`.
RunConfig parse_run_config(std::string_view yaml, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies `key=value` with a dotted key, e.g. "trainer.max_epochs" or
/// "scenarios.default.n_subnetworks". Same keys as the file format.
void apply_override(RunConfig& cfg, std::string_view key, std::string_view value);

/// Fully resolved config as YAML (every constant spelled out, dB units in
/// the key names).
std::string to_yaml(const RunConfig& cfg);

}  // namespace subband
