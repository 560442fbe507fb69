#pragma once

#include "grasp/corpus.hpp"
#include "grasp/llm_client.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace grasp {

enum class Stream { positive, negative };

const char* to_string(Stream s) noexcept;

struct GenerationConfig {
  std::size_t batch_size = 20;
  double base_temperature = 0.7;
  double temperature_jitter = 0.2;
  std::size_t n_total = 10'000;
  double positive_fraction = 0.5;
  std::string system_prompt;
  std::string positive_template;  // placeholders: {{chunk}} {{count}} {{labels}}
  std::string negative_template;
  std::vector<std::string> labels;
  std::string id_prefix = "syn";
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

/// Default templates; both instruct the model to answer with a JSON array of
/// {"text": ..., "entities": {label: [values]}} records.
std::string default_generation_system_prompt();
std::string default_positive_template();
std::string default_negative_template();

std::string render_template(std::string tmpl, const std::map<std::string, std::string>& values);

struct StreamReport {
  std::size_t requested = 0;
  std::size_t batches = 0;
  std::size_t batches_failed = 0;
  std::size_t emitted = 0;
};

struct GenerationReport {
  std::size_t requested = 0;
  std::size_t records_emitted = 0;  // records the model returned in parseable batches
  std::size_t parsed_ok = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> rejected_by_reason;
  std::size_t batches = 0;
  std::size_t batches_unparseable = 0;
  std::size_t batches_client_error = 0;
  std::size_t parse_retries = 0;
  StreamReport positive;
  StreamReport negative;

  nlohmann::json to_json() const;
};

struct GenerationResult {
  std::vector<Example> examples;
  GenerationReport report;
};

/// Temperature for one batch, uniform in [base - jitter, base + jitter].
double draw_temperature(const GenerationConfig& cfg, std::uint64_t seed, std::size_t batch_index);

/// One planned API call.
struct BatchPlan {
  Stream stream;
  std::size_t index;  // global batch index
  std::size_t count;  // records requested
};

std::vector<BatchPlan> plan_batches(const GenerationConfig& cfg);

/// Parses a model reply into records. Returns std::nullopt when the reply is
/// not a JSON list of records at all.
std::optional<nlohmann::json> parse_batch_reply(const std::string& reply);

/// Runs both generation streams. Chunks are assigned to batches round-robin.
GenerationResult generate_pool(const GenerationConfig& cfg, const std::vector<std::string>& chunks,
                               LlmClient& client);

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace grasp
