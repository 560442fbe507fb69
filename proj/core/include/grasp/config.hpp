#pragma once

#include "grasp/clustering.hpp"
#include "grasp/evolve.hpp"
#include "grasp/generate.hpp"
#include "grasp/llm_client.hpp"
#include "grasp/projection.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace grasp {

enum class FitnessMode { llm, surrogate };

const char* to_string(FitnessMode m) noexcept;
FitnessMode fitness_mode_from_string(const std::string& s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::optional<std::filesystem::path> examples;  // pre-labelled pool; skips generation
  std::vector<std::filesystem::path> corpus;      // plain-text documents for generation
  std::optional<std::filesystem::path> validation;
  std::optional<std::filesystem::path> test;
  std::size_t n_validation = 0;
  std::size_t chunk_size = 2000;
};

struct PromptFiles {
  std::optional<std::filesystem::path> positive;
  std::optional<std::filesystem::path> negative;
  std::optional<std::filesystem::path> instruction;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "grasp_out";
  FitnessMode fitness_mode = FitnessMode::surrogate;
  DataConfig data;
  std::vector<std::string> labels;  // empty: derived from the data
  TransportConfig transport;
  ClientConfig client;
  std::optional<std::filesystem::path> embedding_cache;
  GenerationConfig generation;
  ProjectionConfig projection;
  ClusteringParams clustering;
  std::vector<std::size_t> pool_sizes{500, 5000};
  GAConfig ga;
  std::size_t baseline_draws = 3;
  PromptFiles prompts;

  /// The resolved configuration as parsed (after ${VAR} interpolation).
  nlohmann::json snapshot;

  /// Checks paths exist and every sub-configuration's invariants.
  void validate() const;

  /// SHA-256 over the snapshot (minus output_dir) plus the contents of every input file.
  std::string snapshot_hash() const;
};

/// Replaces ${NAME} with the environment variable's value. Unset variables are
/// a ConfigError.
std::string interpolate_env(const std::string& s);

/// Relative paths are resolved against base_dir.
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace grasp
