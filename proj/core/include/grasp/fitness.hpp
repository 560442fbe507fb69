#pragma once

#include "grasp/evolve.hpp"
#include "grasp/llm_client.hpp"
#include "grasp/metrics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace grasp {

/// Instruction text with {{labels}} and {{examples}} placeholders.
std::string default_instruction_template();

/// Demonstrations rendered in the given order, one "Sentence/Entities" block each.
std::string render_demonstrations(const std::vector<const Example*>& demos);

/// The system prompt: instruction with labels and rendered demonstrations.
std::string render_prompt(const std::string& instruction_template, const std::vector<std::string>& labels,
                          const std::vector<const Example*>& demos);

/// The per-item user message.
std::string render_query(const std::string& text);

/// Strict reply parser: a JSON object mapping labels to lists of strings.
/// std::nullopt when the reply does not have that shape.
std::optional<EntityMap> parse_prediction(const std::string& reply);

struct EvaluationOutcome {
  MetricReport report;
  ExtractionCounts counts;
  std::vector<Prediction> predictions;
  std::size_t unparseable = 0;
};

class EvaluationAborted : public std::runtime_error {
 public:
  EvaluationAborted(const std::string& what, ExtractionCounts partial, std::size_t unparseable)
      : std::runtime_error(what), partial_(std::move(partial)), unparseable_(unparseable) {}
  const ExtractionCounts& partial() const noexcept { return partial_; }
  std::size_t unparseable() const noexcept { return unparseable_; }

 private:
  ExtractionCounts partial_;
  std::size_t unparseable_;
};

/// Runs a fixed few-shot prompt over a validation set at temperature 0.
class LlmEvaluator {
 public:
  LlmEvaluator(LlmClient& client, std::vector<Example> validation, std::vector<std::string> labels,
               std::string instruction_template = default_instruction_template());

  /// An empty demonstration list gives the zero-shot evaluation.
  EvaluationOutcome evaluate(const std::vector<const Example*>& demos) const;

  const std::vector<Example>& validation() const noexcept { return validation_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& instruction_template() const noexcept { return template_; }

 private:
  LlmClient& client_;
  std::vector<Example> validation_;
  std::vector<std::string> labels_;
  std::string template_;
};

std::vector<const Example*> genome_examples(const Genome& genome, const ClusteredPool& pool);

/// Fitness = micro-F1 of the genome's prompt on the validation set.
class LlmFitness : public FitnessProvider {
 public:
  LlmFitness(const LlmEvaluator& evaluator, const ClusteredPool& pool) : evaluator_(evaluator), pool_(pool) {}
  double evaluate(const Genome& genome) override;

 private:
  const LlmEvaluator& evaluator_;
  const ClusteredPool& pool_;
};

/// Offline stand-in: 0.5 * distinct clusters / length + 0.5 * mean example
/// quality, where quality is a seeded hash of the example id in [0, 1).
class SurrogateFitness : public FitnessProvider {
 public:
  using Quality = std::function<double(const std::string& example_id)>;

  SurrogateFitness(const ClusteredPool& pool, std::uint64_t seed);
  SurrogateFitness(const ClusteredPool& pool, Quality quality);

  double evaluate(const Genome& genome) override;

  static double hashed_quality(const std::string& id, std::uint64_t seed);

 private:
  const ClusteredPool& pool_;
  Quality quality_;
};

}  // namespace grasp
