#include "grasp/config.hpp"

#include "grasp/hash.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>

namespace grasp {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(FitnessMode m) noexcept {
  return m == FitnessMode::llm ? "llm" : "surrogate";
}

FitnessMode fitness_mode_from_string(const std::string& s) {
  if (s == "llm") return FitnessMode::llm;
  if (s == "surrogate") return FitnessMode::surrogate;
  throw ConfigError("unknown fitness mode '" + s + "' (expected llm or surrogate)");
}

std::string interpolate_env(const std::string& s) {
  static const std::regex kVar(R"(\$\{([A-Za-z_][A-Za-z0-9_]*)\})");
  std::string out;
  auto begin = std::sregex_iterator(s.begin(), s.end(), kVar);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(s, last, static_cast<std::size_t>(m.position()) - last);
    const std::string name = m[1].str();
    const char* value = std::getenv(name.c_str());
    if (!value) throw ConfigError("environment variable " + name + " is not set");
    out += value;
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out.append(s, last);
  return out;
}

namespace {

json interpolate_all(const json& j) {
  if (j.is_string()) return interpolate_env(j.get<std::string>());
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(interpolate_all(v));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = interpolate_all(v);
    return out;
  }
  return j;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
  }
}

void read_ms(const json& obj, const char* key, std::chrono::milliseconds& out) {
  double seconds = 0;
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) {
    read(obj, key, seconds);
    out = std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
  }
}

std::optional<fs::path> read_path(const json& obj, const char* key, const fs::path& base) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw ConfigError(std::string("config field '") + key + "' must be a path string");
    return resolve(base, it->get<std::string>());
  }
  return std::nullopt;
}

const json& section(const json& j, const char* key) {
  static const json kEmpty = json::object();
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return kEmpty;
  if (!it->is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return *it;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

PipelineConfig parse_config(const json& raw, const fs::path& base_dir) {
  if (!raw.is_object()) throw ConfigError("config root must be an object");
  const json j = interpolate_all(raw);
  PipelineConfig cfg;
  cfg.snapshot = j;

  read(j, "seed", cfg.seed);
  if (auto p = read_path(j, "output_dir", base_dir)) cfg.output_dir = *p;
  if (auto it = j.find("fitness_mode"); it != j.end()) cfg.fitness_mode = fitness_mode_from_string(it->get<std::string>());
  read(j, "labels", cfg.labels);
  read(j, "pool_sizes", cfg.pool_sizes);

  const auto& data = section(j, "data");
  cfg.data.examples = read_path(data, "examples", base_dir);
  cfg.data.validation = read_path(data, "validation", base_dir);
  cfg.data.test = read_path(data, "test", base_dir);
  if (auto it = data.find("corpus"); it != data.end()) {
    for (const auto& p : *it) cfg.data.corpus.push_back(resolve(base_dir, p.get<std::string>()));
  }
  read(data, "n_validation", cfg.data.n_validation);
  read(data, "chunk_size", cfg.data.chunk_size);

  const auto& client = section(j, "client");
  read(client, "endpoint", cfg.transport.endpoint);
  read(client, "api_key_env", cfg.transport.api_key_env);
  read_ms(client, "connect_timeout_seconds", cfg.transport.connect_timeout);
  read_ms(client, "timeout_seconds", cfg.transport.request_timeout);
  read(client, "chat_model", cfg.client.chat_model);
  read(client, "embedding_model", cfg.client.embedding_model);
  read(client, "max_retries", cfg.client.max_retries);
  read(client, "max_in_flight", cfg.client.max_in_flight);
  read_ms(client, "backoff_base_seconds", cfg.client.backoff_base);
  read_ms(client, "backoff_cap_seconds", cfg.client.backoff_cap);
  read(client, "max_output_tokens", cfg.client.max_output_tokens);
  read(client, "embedding_batch_size", cfg.client.embedding_batch_size);
  read(client, "embedding_dimension", cfg.client.embedding_dimension);
  cfg.embedding_cache = read_path(client, "embedding_cache", base_dir);

  const auto& gen = section(j, "generation");
  read(gen, "batch_size", cfg.generation.batch_size);
  read(gen, "base_temperature", cfg.generation.base_temperature);
  read(gen, "temperature_jitter", cfg.generation.temperature_jitter);
  read(gen, "n_total", cfg.generation.n_total);
  read(gen, "positive_fraction", cfg.generation.positive_fraction);

  const auto& proj = section(j, "projection");
  if (auto it = proj.find("method"); it != proj.end()) {
    try {
      cfg.projection.method = projection_method_from_string(it->get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  read(proj, "target_dimension", cfg.projection.target_dimension);
  if (auto p = read_path(proj, "path", base_dir)) cfg.projection.precomputed_path = *p;

  const auto& cl = section(j, "clustering");
  read(cl, "min_cluster_size", cfg.clustering.min_cluster_size);
  read(cl, "min_samples", cfg.clustering.min_samples);
  read(cl, "epsilon", cfg.clustering.epsilon);

  const auto& ga = section(j, "ga");
  read(ga, "mu", cfg.ga.mu);
  read(ga, "lambda", cfg.ga.lambda);
  read(ga, "max_generations", cfg.ga.max_generations);
  read(ga, "p_cx", cfg.ga.p_cx);
  read(ga, "p_mut", cfg.ga.p_mut);
  read(ga, "tournament_size", cfg.ga.tournament_size);
  read(ga, "p_min", cfg.ga.p_min);
  read(ga, "p_max", cfg.ga.p_max);
  read(ga, "warmup", cfg.ga.warmup);
  read(ga, "patience", cfg.ga.patience);
  read(ga, "min_relative_improvement", cfg.ga.min_relative_improvement);
  read(ga, "shots", cfg.ga.genome_length);
  read(ga, "eval_workers", cfg.ga.eval_workers);

  read(section(j, "baseline"), "n_draws", cfg.baseline_draws);

  const auto& prompts = section(j, "prompts");
  cfg.prompts.positive = read_path(prompts, "positive", base_dir);
  cfg.prompts.negative = read_path(prompts, "negative", base_dir);
  cfg.prompts.instruction = read_path(prompts, "instruction", base_dir);
  if (cfg.prompts.positive) cfg.generation.positive_template = read_text(*cfg.prompts.positive);
  if (cfg.prompts.negative) cfg.generation.negative_template = read_text(*cfg.prompts.negative);
  cfg.generation.labels = cfg.labels;
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, fs::absolute(path).parent_path());
}

void PipelineConfig::validate() const {
  const auto must_exist = [](const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  if (data.examples) must_exist(*data.examples, "examples file");
  if (data.validation) must_exist(*data.validation, "validation file");
  if (data.test) must_exist(*data.test, "test file");
  for (const auto& c : data.corpus) must_exist(c, "corpus file");
  if (prompts.instruction) must_exist(*prompts.instruction, "instruction template");
  if (!data.examples && data.corpus.empty()) {
    throw ConfigError("data needs either an examples file or corpus documents for generation");
  }
  if (data.chunk_size == 0) throw ConfigError("data.chunk_size must be positive");
  if (projection.method == ProjectionMethod::precomputed) {
    if (projection.precomputed_path.empty()) throw ConfigError("projection.path is required for precomputed import");
    must_exist(projection.precomputed_path, "projection file");
  }
  if (projection.target_dimension < 2) throw ConfigError("projection.target_dimension must be >= 2");
  if (pool_sizes.empty()) throw ConfigError("pool_sizes must list at least one k");
  std::set<std::size_t> ks;
  for (auto k : pool_sizes) {
    if (k < 1) throw ConfigError("pool sizes must be >= 1");
    if (!ks.insert(k).second) throw ConfigError("duplicate pool size " + std::to_string(k));
  }
  if (fitness_mode == FitnessMode::llm && !data.validation && data.n_validation == 0) {
    throw ConfigError("llm fitness needs a validation file or data.n_validation > 0");
  }
  if (client.max_in_flight < 1) throw ConfigError("client.max_in_flight must be >= 1");
  if (client.max_retries < 0) throw ConfigError("client.max_retries must be >= 0");
  if (baseline_draws < 1) throw ConfigError("baseline.n_draws must be >= 1");
  try {
    clustering.validate();
    ga.validate();
    if (!data.examples) generation.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string PipelineConfig::snapshot_hash() const {
  json s = snapshot;
  s.erase("output_dir");
  s["seed"] = seed;
  s["fitness_mode"] = to_string(fitness_mode);
  std::string material = s.dump();
  const auto add_file = [&](const std::optional<fs::path>& p) {
    if (p && fs::exists(*p)) material += "\n" + p->filename().string() + ":" + sha256_file(*p);
  };
  add_file(data.examples);
  add_file(data.validation);
  add_file(data.test);
  for (const auto& c : data.corpus) add_file(c);
  if (projection.method == ProjectionMethod::precomputed) add_file(projection.precomputed_path);
  add_file(prompts.positive);
  add_file(prompts.negative);
  add_file(prompts.instruction);
  return sha256_hex(material);
}

}  // namespace grasp
