#pragma once

#include "grasp/config.hpp"
#include "grasp/fitness.hpp"
#include "grasp/pool.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace grasp {

enum class Stage { generate, reduce, pools, select, evaluate };

inline constexpr Stage kAllStages[] = {Stage::generate, Stage::reduce, Stage::pools, Stage::select,
                                       Stage::evaluate};

const char* to_string(Stage s) noexcept;
Stage stage_from_string(const std::string& s);

struct ArtifactRecord {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct StageRecord {
  std::string name;
  bool complete = false;
  std::vector<ArtifactRecord> artifacts;
  double seconds = 0.0;
  std::string completed_at;
};

struct RunManifest {
  std::string config_hash;
  std::vector<StageRecord> stages;
  std::vector<Stage> executed;  // stages run by this invocation; not persisted

  const StageRecord* find(Stage s) const;
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

RunManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// True when every artifact exists and its contents still hash to the recorded value.
bool artifacts_valid(const StageRecord& record, const std::filesystem::path& dir);

class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& what)
      : std::runtime_error(std::string(to_string(stage)) + " stage failed: " + what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

struct RunOptions {
  std::optional<Stage> until;             // last stage to run (inclusive)
  std::optional<Stage> force;             // re-run this stage even if complete
  std::shared_ptr<Transport> transport;   // defaults to HttpTransport over cfg.transport
  std::ostream* log = nullptr;
};

/// Runs the stages in order, persisting the manifest after each. Stages whose
/// record is complete under an unchanged config hash are skipped; everything
/// after the first re-run stage is recomputed. Client failures surface as
/// LlmError, other failures as StageError.
RunManifest run_pipeline(const PipelineConfig& cfg, const RunOptions& options = {});

struct BaselineSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single draw
  std::vector<double> values;

  nlohmann::json to_json() const;
};

/// n_draws independent duplicate-free uniform draws of `shots` examples, each scored.
BaselineSummary baseline_random(const ClusteredPool& pool, std::size_t shots, std::size_t n_draws,
                                FitnessProvider& fitness, std::uint64_t seed);

/// The instruction template alone, with no demonstrations.
MetricReport baseline_zeroshot(const LlmEvaluator& evaluator);

// Artifact layout inside the output directory.
std::string pool_file_name(std::size_t k);
std::string trace_file_name(std::size_t k);
std::string best_genome_file_name(std::size_t k);
std::string prompt_file_name(std::size_t k);
std::string evaluation_file_name(std::size_t k);

/// Candidate pool file (id, cluster in draw order) turned back into a pool.
ClusteredPool load_candidate_pool(const std::filesystem::path& pool_file, const std::vector<Example>& candidates);

/// Genes for the ids listed in a best-genome file.
Genome load_best_genome(const std::filesystem::path& path, const ClusteredPool& pool);

/// Random baselines (and zero-shot in llm mode) for every pool size, written
/// as baseline_k<k>.json / zeroshot.json. Requires the pools stage.
nlohmann::json run_baselines(const PipelineConfig& cfg, const RunOptions& options = {});

}  // namespace grasp
