#include "grasp/generate.hpp"

#include "grasp/parallel.hpp"
#include "grasp/rng.hpp"

#include <fmt/format.h>

#include <cmath>
#include <optional>
#include <unordered_set>

namespace grasp {

using nlohmann::json;

const char* to_string(Stream s) noexcept {
  return s == Stream::positive ? "positive" : "negative";
}

void GenerationConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("generation batch_size must be >= 1");
  if (n_total < 1) throw std::invalid_argument("generation n_total must be >= 1");
  if (base_temperature - temperature_jitter < 0.0 || temperature_jitter < 0.0) {
    throw std::invalid_argument("base_temperature - temperature_jitter must be >= 0");
  }
  if (base_temperature + temperature_jitter > 2.0) {
    throw std::invalid_argument("base_temperature + temperature_jitter must be <= 2");
  }
  if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) {
    throw std::invalid_argument("positive_fraction must lie in [0, 1]");
  }
}

std::string default_generation_system_prompt() {
  return "You write realistic, self-contained single sentences for an information extraction "
         "dataset. Reply with a JSON array only, no commentary.";
}

std::string default_positive_template() {
  return R"(Source passage:
"""
{{chunk}}
"""

Write {{count}} distinct sentences in the style of the passage. Every sentence must state at least one
value for one of these labels: {{labels}}.

Return a JSON array of exactly {{count}} objects of the form
{"text": "<sentence>", "entities": {"<label>": ["<value exactly as written in the sentence>"]}}.
Copy each value verbatim from the sentence. Every object must have at least one entity.)";
}

std::string default_negative_template() {
  return R"(Source passage:
"""
{{chunk}}
"""

Write {{count}} distinct sentences in the style of the passage that contain NO value for any of these
labels: {{labels}}.

Return a JSON array of exactly {{count}} objects of the form {"text": "<sentence>", "entities": {}}.
The "entities" object must be empty for every sentence.)";
}

std::string render_template(std::string tmpl, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string needle = "{{" + key + "}}";
    for (auto pos = tmpl.find(needle); pos != std::string::npos; pos = tmpl.find(needle, pos + value.size())) {
      tmpl.replace(pos, needle.size(), value);
    }
  }
  return tmpl;
}

json GenerationReport::to_json() const {
  const auto stream = [](const StreamReport& s) {
    return json{{"requested", s.requested}, {"batches", s.batches},
                {"batches_failed", s.batches_failed}, {"emitted", s.emitted}};
  };
  return json{{"requested", requested},
              {"records_emitted", records_emitted},
              {"parsed_ok", parsed_ok},
              {"rejected", rejected},
              {"rejected_by_reason", rejected_by_reason},
              {"batches", batches},
              {"batches_unparseable", batches_unparseable},
              {"batches_client_error", batches_client_error},
              {"parse_retries", parse_retries},
              {"streams", json{{"positive", stream(positive)}, {"negative", stream(negative)}}}};
}

double draw_temperature(const GenerationConfig& cfg, std::uint64_t seed, std::size_t batch_index) {
  const double lo = cfg.base_temperature - cfg.temperature_jitter;
  const double hi = cfg.base_temperature + cfg.temperature_jitter;
  if (cfg.temperature_jitter == 0.0) return cfg.base_temperature;
  Rng rng(derive_seed(seed, "temperature:" + std::to_string(batch_index)));
  return std::clamp(rng.uniform(lo, hi), lo, hi);
}

std::vector<BatchPlan> plan_batches(const GenerationConfig& cfg) {
  const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.n_total) * cfg.positive_fraction));
  const std::size_t n_neg = cfg.n_total - std::min(n_pos, cfg.n_total);
  std::vector<BatchPlan> plan;
  std::size_t index = 0;
  for (auto [stream, quota] : {std::pair{Stream::positive, n_pos}, std::pair{Stream::negative, n_neg}}) {
    for (std::size_t done = 0; done < quota; done += cfg.batch_size) {
      plan.push_back({stream, index++, std::min(cfg.batch_size, quota - done)});
    }
  }
  return plan;
}

std::optional<json> parse_batch_reply(const std::string& reply) {
  std::string text = reply;
  // Tolerate a surrounding markdown code fence.
  if (auto fence = text.find("```"); fence != std::string::npos) {
    auto body_start = text.find('\n', fence);
    auto fence_end = body_start == std::string::npos ? std::string::npos : text.find("```", body_start);
    if (fence_end != std::string::npos) text = text.substr(body_start + 1, fence_end - body_start - 1);
  }
  auto parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) {
    const auto first = text.find('[');
    const auto last = text.rfind(']');
    if (first == std::string::npos || last == std::string::npos || last < first) return std::nullopt;
    parsed = json::parse(text.substr(first, last - first + 1), nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
  }
  if (parsed.is_object()) {
    if (auto it = parsed.find("examples"); it != parsed.end() && it->is_array()) return *it;
    return std::nullopt;
  }
  if (!parsed.is_array()) return std::nullopt;
  return parsed;
}

namespace {

struct BatchOutcome {
  std::optional<json> records;
  bool client_error = false;
  bool retried = false;
  std::string error;
};

// Validates one record against the Example schema; returns the rejection
// reason on failure.
std::optional<std::string> validate_record(const json& rec, Stream stream, EntityMap& entities, std::string& text) {
  if (!rec.is_object()) return "schema";
  auto t = rec.find("text");
  if (t == rec.end() || !t->is_string() || t->get<std::string>().empty()) return "schema";
  text = t->get<std::string>();
  entities.clear();
  if (auto e = rec.find("entities"); e != rec.end() && !e->is_null()) {
    if (!e->is_object()) return "schema";
    for (const auto& [label, values] : e->items()) {
      if (label.empty() || !values.is_array()) return "schema";
      for (const auto& v : values) {
        if (!v.is_string() || v.get<std::string>().empty()) return "schema";
        entities[label].insert(v.get<std::string>());
      }
      if (entities[label].empty()) entities.erase(label);
    }
  }
  const bool has_entities = !entities.empty();
  if ((stream == Stream::positive) != has_entities) return "stream-constraint";
  return std::nullopt;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ", ";
    out += x;
  }
  return out.empty() ? "the target entity labels" : out;
}

}  // namespace

GenerationResult generate_pool(const GenerationConfig& cfg, const std::vector<std::string>& chunks,
                               LlmClient& client) {
  cfg.validate();
  if (chunks.empty()) throw GenerationError("generation needs at least one corpus chunk");

  const auto plan = plan_batches(cfg);
  const std::string system = cfg.system_prompt.empty() ? default_generation_system_prompt() : cfg.system_prompt;
  const std::string labels = join(cfg.labels);

  std::vector<BatchOutcome> outcomes(plan.size());
  parallel_for(plan.size(), client.config().max_in_flight, [&](std::size_t b) {
    const auto& batch = plan[b];
    const auto& tmpl = batch.stream == Stream::positive
                           ? (cfg.positive_template.empty() ? default_positive_template() : cfg.positive_template)
                           : (cfg.negative_template.empty() ? default_negative_template() : cfg.negative_template);
    const auto prompt = render_template(tmpl, {{"chunk", chunks[batch.index % chunks.size()]},
                                              {"count", std::to_string(batch.count)},
                                              {"labels", labels}});
    const double temperature = draw_temperature(cfg, cfg.seed, batch.index);
    auto& out = outcomes[b];
    try {
      const auto req = client.request(system, prompt, temperature);
      out.records = parse_batch_reply(client.chat(req));
      if (!out.records) {
        out.retried = true;
        out.records = parse_batch_reply(client.chat(req));
      }
    } catch (const LlmError& e) {
      out.client_error = true;
      out.error = e.what();
    }
  });

  GenerationResult result;
  auto& rep = result.report;
  rep.requested = cfg.n_total;
  rep.batches = plan.size();
  std::unordered_set<std::string> seen_text;
  std::size_t ok_batches = 0;
  for (std::size_t b = 0; b < plan.size(); ++b) {
    const auto& batch = plan[b];
    const auto& out = outcomes[b];
    auto& srep = batch.stream == Stream::positive ? rep.positive : rep.negative;
    srep.requested += batch.count;
    ++srep.batches;
    if (out.retried) ++rep.parse_retries;
    if (out.client_error) {
      ++rep.batches_client_error;
      ++srep.batches_failed;
      continue;
    }
    if (!out.records) {
      ++rep.batches_unparseable;
      ++srep.batches_failed;
      continue;
    }
    ++ok_batches;
    std::size_t accepted_in_batch = 0;
    for (const auto& rec : *out.records) {
      ++rep.records_emitted;
      EntityMap entities;
      std::string text;
      std::optional<std::string> reason = validate_record(rec, batch.stream, entities, text);
      if (!reason && accepted_in_batch >= batch.count) reason = "over-quota";
      if (!reason && !seen_text.insert(text).second) reason = "duplicate-text";
      if (reason) {
        ++rep.rejected;
        ++rep.rejected_by_reason[*reason];
        continue;
      }
      ++accepted_in_batch;
      ++rep.parsed_ok;
      ++srep.emitted;
      Example ex;
      ex.id = fmt::format("{}-{}{:06d}", cfg.id_prefix, batch.stream == Stream::positive ? 'p' : 'n',
                          srep.emitted);
      ex.text = std::move(text);
      ex.entities = std::move(entities);
      ex.provenance = Provenance::synthetic;
      result.examples.push_back(std::move(ex));
    }
  }
  if (ok_batches == 0) {
    throw GenerationError("generation failed: none of the " + std::to_string(plan.size()) +
                          " batches produced parseable output");
  }
  return result;
}

}  // namespace grasp
