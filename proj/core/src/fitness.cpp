#include "grasp/fitness.hpp"

#include "grasp/generate.hpp"
#include "grasp/parallel.hpp"

#include <algorithm>
#include <mutex>
#include <set>

namespace grasp {

using nlohmann::json;

std::string default_instruction_template() {
  return R"(You extract financial entities from single sentences.
Labels: {{labels}}

For the sentence given by the user, answer with one JSON object that maps each label you find to a list
of values copied exactly as they appear in the sentence. Use {} when the sentence contains none of the
labels. Output the JSON object only.

Examples:
{{examples}})";
}

std::string render_demonstrations(const std::vector<const Example*>& demos) {
  std::string out;
  for (const Example* e : demos) {
    json ents = json::object();
    for (const auto& [label, values] : e->entities) ents[label] = std::vector<std::string>(values.begin(), values.end());
    out += "Sentence: " + e->text + "\nEntities: " + ents.dump() + "\n\n";
  }
  return out.empty() ? "(none)\n" : out;
}

std::string render_prompt(const std::string& instruction_template, const std::vector<std::string>& labels,
                          const std::vector<const Example*>& demos) {
  std::string label_list;
  for (const auto& l : labels) label_list += (label_list.empty() ? "" : ", ") + l;
  return render_template(instruction_template, {{"labels", label_list}, {"examples", render_demonstrations(demos)}});
}

std::string render_query(const std::string& text) {
  return "Sentence: " + text + "\nEntities:";
}

std::optional<EntityMap> parse_prediction(const std::string& reply) {
  std::string text = reply;
  if (auto fence = text.find("```"); fence != std::string::npos) {
    const auto body = text.find('\n', fence);
    const auto end = body == std::string::npos ? std::string::npos : text.find("```", body);
    if (end != std::string::npos) text = text.substr(body + 1, end - body - 1);
  }
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    const auto first = text.find('{');
    const auto last = text.rfind('}');
    if (first == std::string::npos || last == std::string::npos || last < first) return std::nullopt;
    j = json::parse(text.substr(first, last - first + 1), nullptr, false);
  }
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  EntityMap out;
  for (const auto& [label, values] : j.items()) {
    if (values.is_null()) continue;
    if (!values.is_array()) return std::nullopt;
    for (const auto& v : values) {
      if (!v.is_string()) return std::nullopt;
      auto s = normalize_value(v.get<std::string>());
      if (!s.empty()) out[label].insert(std::move(s));
    }
  }
  return out;
}

LlmEvaluator::LlmEvaluator(LlmClient& client, std::vector<Example> validation, std::vector<std::string> labels,
                           std::string instruction_template)
    : client_(client),
      validation_(std::move(validation)),
      labels_(std::move(labels)),
      template_(std::move(instruction_template)) {
  if (validation_.empty()) throw std::invalid_argument("validation set is empty");
}

EvaluationOutcome LlmEvaluator::evaluate(const std::vector<const Example*>& demos) const {
  const std::string system = render_prompt(template_, labels_, demos);
  const std::size_t n = validation_.size();
  std::vector<std::optional<EntityMap>> replies(n);
  std::vector<bool> done(n, false);
  std::mutex mu;
  try {
    parallel_for(n, client_.config().max_in_flight, [&](std::size_t i) {
      auto reply = client_.chat(client_.request(system, render_query(validation_[i].text), 0.0));
      auto parsed = parse_prediction(reply);
      std::lock_guard lock(mu);
      replies[i] = std::move(parsed);
      done[i] = true;
    });
  } catch (const std::exception& e) {
    ExtractionCounts partial;
    std::size_t unparseable = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i]) continue;
      if (!replies[i]) ++unparseable;
      partial += score_example(validation_[i], Prediction{validation_[i].id, replies[i].value_or(EntityMap{})});
    }
    throw EvaluationAborted(std::string("evaluation aborted: ") + e.what(), std::move(partial), unparseable);
  }

  EvaluationOutcome out;
  std::vector<ExtractionCounts> counts;
  counts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!replies[i]) ++out.unparseable;
    Prediction pred{validation_[i].id, replies[i].value_or(EntityMap{})};
    counts.push_back(score_example(validation_[i], pred));
    out.counts += counts.back();
    out.predictions.push_back(std::move(pred));
  }
  out.report = aggregate(counts);
  return out;
}

std::vector<const Example*> genome_examples(const Genome& genome, const ClusteredPool& pool) {
  std::vector<const Example*> out;
  for (std::size_t idx : example_indices(genome, pool)) out.push_back(&pool.examples[idx]);
  return out;
}

double LlmFitness::evaluate(const Genome& genome) {
  return evaluator_.evaluate(genome_examples(genome, pool_)).report.micro_f1;
}

SurrogateFitness::SurrogateFitness(const ClusteredPool& pool, std::uint64_t seed)
    : pool_(pool), quality_([seed](const std::string& id) { return hashed_quality(id, seed); }) {}

SurrogateFitness::SurrogateFitness(const ClusteredPool& pool, Quality quality)
    : pool_(pool), quality_(std::move(quality)) {}

double SurrogateFitness::hashed_quality(const std::string& id, std::uint64_t seed) {
  return static_cast<double>(mix64(fnv1a64(id) ^ mix64(seed)) >> 11) * 0x1.0p-53;
}

double SurrogateFitness::evaluate(const Genome& genome) {
  if (genome.empty()) return 0.0;
  std::set<std::size_t> clusters;
  std::vector<double> qualities;
  for (const auto& g : genome) {
    clusters.insert(g.cluster);
    qualities.push_back(quality_(pool_.examples.at(pool_.clusters.at(g.cluster).at(g.example)).id));
  }
  // Summed in sorted order so gene order cannot change the rounding.
  std::sort(qualities.begin(), qualities.end());
  double quality = 0.0;
  for (double q : qualities) quality += q;
  const double len = static_cast<double>(genome.size());
  return 0.5 * static_cast<double>(clusters.size()) / len + 0.5 * quality / len;
}

}  // namespace grasp
