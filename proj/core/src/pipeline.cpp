#include "grasp/pipeline.hpp"

#include "grasp/hash.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace grasp {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Stage s) noexcept {
  switch (s) {
    case Stage::generate: return "generate";
    case Stage::reduce: return "reduce";
    case Stage::pools: return "pools";
    case Stage::select: return "select";
    case Stage::evaluate: return "evaluate";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : kAllStages) {
    if (s == to_string(st)) return st;
  }
  throw std::invalid_argument("unknown stage '" + s + "'");
}

std::string pool_file_name(std::size_t k) { return fmt::format("pool_k{}.tsv", k); }
std::string trace_file_name(std::size_t k) { return fmt::format("trace_k{}.tsv", k); }
std::string best_genome_file_name(std::size_t k) { return fmt::format("best_genome_k{}.json", k); }
std::string prompt_file_name(std::size_t k) { return fmt::format("prompt_k{}.txt", k); }
std::string evaluation_file_name(std::size_t k) { return fmt::format("evaluation_k{}.json", k); }

const StageRecord* RunManifest::find(Stage s) const {
  for (const auto& r : stages) {
    if (r.name == to_string(s)) return &r;
  }
  return nullptr;
}

json RunManifest::to_json() const {
  json st = json::array();
  for (const auto& r : stages) {
    json arts = json::array();
    for (const auto& a : r.artifacts) arts.push_back(json{{"path", a.path}, {"sha256", a.sha256}});
    st.push_back(json{{"name", r.name},
                      {"complete", r.complete},
                      {"artifacts", std::move(arts)},
                      {"seconds", r.seconds},
                      {"completed_at", r.completed_at}});
  }
  return json{{"config_hash", config_hash}, {"stages", std::move(st)}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.config_hash = j.value("config_hash", "");
  for (const auto& s : j.value("stages", json::array())) {
    StageRecord r;
    r.name = s.at("name").get<std::string>();
    r.complete = s.value("complete", false);
    r.seconds = s.value("seconds", 0.0);
    r.completed_at = s.value("completed_at", "");
    for (const auto& a : s.value("artifacts", json::array())) {
      r.artifacts.push_back({a.at("path").get<std::string>(), a.at("sha256").get<std::string>()});
    }
    m.stages.push_back(std::move(r));
  }
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return {};
  try {
    return RunManifest::from_json(j);
  } catch (const json::exception&) {
    return {};
  }
}

void save_manifest(const fs::path& path, const RunManifest& manifest) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << manifest.to_json().dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

bool artifacts_valid(const StageRecord& record, const fs::path& dir) {
  for (const auto& a : record.artifacts) {
    const auto p = dir / a.path;
    if (!fs::exists(p) || sha256_file(p) != a.sha256) return false;
  }
  return true;
}

json BaselineSummary::to_json() const {
  return json{{"mean", mean}, {"std", stddev}, {"values", values}};
}

BaselineSummary baseline_random(const ClusteredPool& pool, std::size_t shots, std::size_t n_draws,
                                FitnessProvider& fitness, std::uint64_t seed) {
  if (pool.size() < shots) {
    throw std::invalid_argument("pool of " + std::to_string(pool.size()) + " examples is smaller than " +
                                std::to_string(shots) + " shots");
  }
  if (n_draws < 1) throw std::invalid_argument("baseline needs at least one draw");
  Rng rng(seed);
  BaselineSummary s;
  for (std::size_t d = 0; d < n_draws; ++d) s.values.push_back(fitness.evaluate(sample_genome(pool, shots, rng)));
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / static_cast<double>(n_draws);
  if (n_draws > 1) {
    double ss = 0.0;
    for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n_draws - 1));
  }
  return s;
}

MetricReport baseline_zeroshot(const LlmEvaluator& evaluator) {
  return evaluator.evaluate({}).report;
}

ClusteredPool load_candidate_pool(const fs::path& pool_file, const std::vector<Example>& candidates) {
  std::ifstream in(pool_file);
  if (!in) throw std::runtime_error("cannot open " + pool_file.string());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < candidates.size(); ++i) index.emplace(candidates[i].id, i);
  std::vector<int> assignment(candidates.size(), kNoise);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    const auto it = tab == std::string::npos ? index.end() : index.find(line.substr(0, tab));
    if (it == index.end()) throw std::runtime_error(pool_file.string() + ": unknown row '" + line + "'");
    assignment[it->second] = std::stoi(line.substr(tab + 1));
  }
  return filter_noise(candidates, assignment);
}

Genome load_best_genome(const fs::path& path, const ClusteredPool& pool) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto j = json::parse(in);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < pool.size(); ++i) index.emplace(pool.examples[i].id, i);
  std::vector<std::size_t> slot(pool.size(), 0);
  for (const auto& members : pool.clusters) {
    for (std::size_t e = 0; e < members.size(); ++e) slot[members[e]] = e;
  }
  Genome g;
  for (const auto& ex : j.at("examples")) {
    const auto it = index.find(ex.at("id").get<std::string>());
    if (it == index.end()) throw std::runtime_error(path.string() + ": id not in pool");
    g.push_back({static_cast<std::size_t>(pool.assignment[it->second]), slot[it->second]});
  }
  return g;
}

namespace {

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Stage implementations share lazily built state.
class Runner {
 public:
  Runner(const PipelineConfig& cfg, const RunOptions& opts) : cfg_(cfg), opts_(opts), dir_(cfg.output_dir) {}

  std::vector<std::string> run(Stage s) {
    switch (s) {
      case Stage::generate: return generate();
      case Stage::reduce: return reduce();
      case Stage::pools: return pools();
      case Stage::select: return select();
      case Stage::evaluate: return evaluate();
    }
    return {};
  }

  LlmClient& client() {
    if (!client_) {
      auto transport = opts_.transport ? opts_.transport : std::make_shared<HttpTransport>(cfg_.transport);
      client_ = std::make_unique<LlmClient>(cfg_.client, std::move(transport));
      if (cfg_.embedding_cache) client_->load_cache(*cfg_.embedding_cache);
    }
    return *client_;
  }

  std::vector<Example> candidates() const { return load_examples(dir_ / "candidates.jsonl"); }
  std::vector<Example> validation() const { return load_examples(dir_ / "validation.jsonl"); }

  std::vector<std::string> labels() const {
    if (!cfg_.labels.empty()) return cfg_.labels;
    auto all = candidates();
    auto val = validation();
    all.insert(all.end(), val.begin(), val.end());
    try {
      return LabelSchema::from_examples(all).labels();
    } catch (const CorpusError&) {
      return {};
    }
  }

  std::string instruction() const {
    return cfg_.prompts.instruction ? read_text(*cfg_.prompts.instruction) : default_instruction_template();
  }

  std::uint64_t seed(const std::string& salt) const { return derive_seed(cfg_.seed, salt); }

  void log(const std::string& msg) const {
    if (opts_.log) *opts_.log << msg << '\n';
  }

 private:
  std::vector<std::string> generate() {
    std::vector<std::string> arts;
    std::vector<Example> pool;
    if (cfg_.data.examples) {
      pool = load_examples(*cfg_.data.examples);
      log(fmt::format("loaded {} examples from {}", pool.size(), cfg_.data.examples->string()));
    } else {
      auto gen = cfg_.generation;
      gen.seed = seed("generate");
      const std::size_t n_batches = plan_batches(gen).size();
      std::vector<std::vector<std::string>> per_doc;
      const std::size_t per = (n_batches + cfg_.data.corpus.size() - 1) / cfg_.data.corpus.size();
      for (const auto& path : cfg_.data.corpus) {
        const auto doc = load_document(path, cfg_.data.chunk_size);
        per_doc.push_back(sample_chunks(doc, per, seed("chunks:" + doc.id)));
      }
      std::vector<std::string> chunks;
      for (std::size_t i = 0; i < per; ++i) {
        for (const auto& d : per_doc) chunks.push_back(d[i]);
      }
      auto result = generate_pool(gen, chunks, client());
      pool = std::move(result.examples);
      write_json(dir_ / "generation_report.json", result.report.to_json());
      arts.push_back("generation_report.json");
      log(fmt::format("generated {} examples ({} rejected)", result.report.parsed_ok, result.report.rejected));
    }
    save_examples(dir_ / "pool.jsonl", pool);
    arts.push_back("pool.jsonl");

    DatasetSplit split;
    if (cfg_.data.validation) {
      split.candidates = pool;
      split.validation = load_examples(*cfg_.data.validation);
    } else {
      split = split_dataset(pool, cfg_.data.n_validation, seed("split"));
    }
    save_examples(dir_ / "candidates.jsonl", split.candidates);
    save_examples(dir_ / "validation.jsonl", split.validation);
    arts.push_back("candidates.jsonl");
    arts.push_back("validation.jsonl");
    return arts;
  }

  std::vector<std::string> reduce() {
    const auto cands = candidates();
    if (cands.empty()) throw std::runtime_error("no candidate examples to cluster");
    std::vector<Point> points;
    if (cfg_.projection.method == ProjectionMethod::precomputed) {
      const auto pool = load_examples(dir_ / "pool.jsonl");
      const auto rows = import_projection(cfg_.projection.precomputed_path, pool.size(), cfg_.projection.target_dimension);
      std::unordered_map<std::string, std::size_t> row_of;
      for (std::size_t i = 0; i < pool.size(); ++i) row_of.emplace(pool[i].id, i);
      for (const auto& c : cands) {
        const auto it = row_of.find(c.id);
        if (it == row_of.end()) throw std::runtime_error("candidate '" + c.id + "' has no projection row");
        points.push_back(rows[it->second]);
      }
    } else {
      std::vector<std::string> texts;
      for (const auto& c : cands) texts.push_back(c.text);
      const auto vectors = client().embed_batch(texts);
      if (cfg_.embedding_cache) client().save_cache(*cfg_.embedding_cache);
      points = project_linear(vectors, cfg_.projection.target_dimension);
    }
    save_points(dir_ / "projection.txt", points);

    const auto clustering = cluster(points, cfg_.clustering);
    save_assignment(dir_ / "assignment.tsv", cands, clustering.labels);
    std::vector<std::size_t> sizes(clustering.n_clusters, 0);
    std::size_t noise = 0;
    for (int l : clustering.labels) (l == kNoise ? noise : sizes[static_cast<std::size_t>(l)]) += 1;
    write_json(dir_ / "clusters.json", json{{"n_points", cands.size()},
                                            {"n_clusters", clustering.n_clusters},
                                            {"noise", noise},
                                            {"sizes", sizes}});
    log(fmt::format("{} clusters, {} of {} points noise", clustering.n_clusters, noise, cands.size()));
    return {"projection.txt", "assignment.tsv", "clusters.json"};
  }

  std::vector<std::string> pools() {
    const auto cands = candidates();
    const auto clustered = filter_noise(cands, load_assignment(dir_ / "assignment.tsv", cands));
    std::vector<std::string> arts;
    for (std::size_t k : cfg_.pool_sizes) {
      const auto cp = build_pool(clustered, k);
      if (cp.selected.size() < k) {
        log(fmt::format("pool k={} holds only {} noise-free examples", k, cp.selected.size()));
      }
      std::ofstream out(dir_ / pool_file_name(k), std::ios::trunc);
      out << "id\tcluster\n";
      for (std::size_t idx : cp.selected) out << clustered.examples[idx].id << '\t' << clustered.assignment[idx] << '\n';
      arts.push_back(pool_file_name(k));
    }
    return arts;
  }

  std::vector<std::string> select() {
    const auto cands = candidates();
    std::vector<std::string> arts;
    std::unique_ptr<LlmEvaluator> evaluator;
    const auto instr = instruction();
    const auto label_list = labels();
    if (cfg_.fitness_mode == FitnessMode::llm) {
      evaluator = std::make_unique<LlmEvaluator>(client(), validation(), label_list, instr);
    }
    for (std::size_t k : cfg_.pool_sizes) {
      const auto pool = load_candidate_pool(dir_ / pool_file_name(k), cands);
      auto ga = cfg_.ga;
      ga.seed = seed(fmt::format("select:k{}", k));

      std::unique_ptr<FitnessProvider> fitness;
      if (evaluator) {
        fitness = std::make_unique<LlmFitness>(*evaluator, pool);
      } else {
        fitness = std::make_unique<SurrogateFitness>(pool, seed("surrogate"));
      }

      std::ofstream trace(dir_ / trace_file_name(k), std::ios::binary | std::ios::trunc);
      write_trace_header(trace);
      EvolveObserver obs;
      obs.on_generation = [&](const GenerationRecord& r) {
        write_trace_row(trace, r);
        trace.flush();
        log(fmt::format("k={} gen {:>2}: mean {:.4f} best {:.4f} D {:.3f} p_inter {:.3f}", k, r.generation,
                        r.mean_fitness, r.best_fitness, r.diversity, r.p_inter));
      };
      const auto result = evolve(pool, *fitness, ga, obs);
      trace.close();

      const auto demos = genome_examples(result.best, pool);
      const auto prompt = render_prompt(instr, label_list, demos);
      json examples = json::array();
      for (std::size_t i = 0; i < demos.size(); ++i) {
        examples.push_back(json{{"id", demos[i]->id}, {"cluster", result.best[i].cluster}, {"text", demos[i]->text}});
      }
      write_json(dir_ / best_genome_file_name(k), json{{"k", k},
                                                      {"fitness_mode", to_string(cfg_.fitness_mode)},
                                                      {"fitness", result.best_fitness},
                                                      {"generations", result.trace.size()},
                                                      {"early_stopped", result.early_stopped},
                                                      {"evaluations", result.total_evaluations},
                                                      {"examples", std::move(examples)},
                                                      {"prompt", prompt}});
      write_text(dir_ / prompt_file_name(k), prompt);
      arts.push_back(trace_file_name(k));
      arts.push_back(best_genome_file_name(k));
      arts.push_back(prompt_file_name(k));
    }
    return arts;
  }

  std::vector<std::string> evaluate() {
    const auto cands = candidates();
    std::vector<std::string> arts;
    const auto instr = instruction();
    const auto label_list = labels();
    std::unique_ptr<LlmEvaluator> test_eval;
    std::optional<MetricReport> zeroshot;
    if (cfg_.fitness_mode == FitnessMode::llm) {
      auto held_out = cfg_.data.test ? load_examples(*cfg_.data.test) : validation();
      test_eval = std::make_unique<LlmEvaluator>(client(), std::move(held_out), label_list, instr);
      zeroshot = baseline_zeroshot(*test_eval);
      write_json(dir_ / "zeroshot.json", zeroshot->to_json());
      arts.push_back("zeroshot.json");
    }
    for (std::size_t k : cfg_.pool_sizes) {
      const auto pool = load_candidate_pool(dir_ / pool_file_name(k), cands);
      const auto best = load_best_genome(dir_ / best_genome_file_name(k), pool);
      json out{{"k", k}, {"fitness_mode", to_string(cfg_.fitness_mode)}};
      if (test_eval) {
        const auto outcome = test_eval->evaluate(genome_examples(best, pool));
        LlmFitness fit(*test_eval, pool);
        const auto random = baseline_random(pool, cfg_.ga.genome_length, cfg_.baseline_draws, fit,
                                            seed(fmt::format("baseline:k{}", k)));
        out["held_out"] = cfg_.data.test ? "test" : "validation";
        out["grasp"] = outcome.report.to_json();
        out["unparseable"] = outcome.unparseable;
        out["random_micro_f1"] = random.to_json();
        write_text(dir_ / fmt::format("evaluation_k{}_labels.tsv", k), outcome.report.label_table());
        arts.push_back(fmt::format("evaluation_k{}_labels.tsv", k));
      } else {
        SurrogateFitness fit(pool, seed("surrogate"));
        out["grasp_fitness"] = fit.evaluate(best);
        out["random_fitness"] = baseline_random(pool, cfg_.ga.genome_length, cfg_.baseline_draws, fit,
                                                seed(fmt::format("baseline:k{}", k)))
                                    .to_json();
      }
      write_json(dir_ / evaluation_file_name(k), out);
      arts.push_back(evaluation_file_name(k));
    }
    return arts;
  }

  const PipelineConfig& cfg_;
  const RunOptions& opts_;
  fs::path dir_;
  std::unique_ptr<LlmClient> client_;
};

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  const fs::path manifest_path = dir / "manifest.json";

  RunManifest manifest = load_manifest(manifest_path);
  const auto hash = cfg.snapshot_hash();
  if (manifest.config_hash != hash) {
    manifest.stages.clear();
    manifest.config_hash = hash;
  }

  Runner runner(cfg, options);
  bool rerun = false;
  for (Stage stage : kAllStages) {
    const StageRecord* rec = manifest.find(stage);
    const bool reusable = !rerun && rec && rec->complete && options.force != stage && artifacts_valid(*rec, dir);
    if (!reusable) {
      if (!rerun) {
        // Drop this stage's record and everything after it.
        auto it = std::find_if(manifest.stages.begin(), manifest.stages.end(),
                               [&](const StageRecord& r) { return r.name == to_string(stage); });
        if (it == manifest.stages.end()) {
          std::size_t keep = 0;
          for (Stage s : kAllStages) {
            if (s == stage) break;
            if (manifest.find(s)) ++keep;
          }
          manifest.stages.resize(std::min(keep, manifest.stages.size()));
        } else {
          manifest.stages.erase(it, manifest.stages.end());
        }
        save_manifest(manifest_path, manifest);
      }
      rerun = true;

      runner.log(fmt::format("== {} ==", to_string(stage)));
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<std::string> files;
      try {
        files = runner.run(stage);
      } catch (const LlmError&) {
        throw;
      } catch (const EvaluationAborted&) {
        throw;
      } catch (const EvolutionAborted&) {
        throw;
      } catch (const std::exception& e) {
        throw StageError(stage, e.what());
      }
      StageRecord r;
      r.name = to_string(stage);
      r.complete = true;
      for (const auto& f : files) r.artifacts.push_back({f, sha256_file(dir / f)});
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.completed_at = now_iso8601();
      manifest.stages.push_back(std::move(r));
      manifest.executed.push_back(stage);
      save_manifest(manifest_path, manifest);
    } else {
      runner.log(fmt::format("== {} (up to date) ==", to_string(stage)));
    }
    if (options.until == stage) break;
  }
  return manifest;
}

json run_baselines(const PipelineConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  const auto manifest = load_manifest(dir / "manifest.json");
  const auto* pools = manifest.find(Stage::pools);
  if (!pools || !pools->complete || manifest.config_hash != cfg.snapshot_hash() || !artifacts_valid(*pools, dir)) {
    throw StageError(Stage::pools, "candidate pools are missing or stale; run 'reduce' first");
  }
  Runner runner(cfg, options);
  const auto cands = runner.candidates();
  json summary = json::object();
  std::unique_ptr<LlmEvaluator> evaluator;
  if (cfg.fitness_mode == FitnessMode::llm) {
    auto held_out = cfg.data.test ? load_examples(*cfg.data.test) : runner.validation();
    evaluator = std::make_unique<LlmEvaluator>(runner.client(), std::move(held_out), runner.labels(),
                                               runner.instruction());
    const auto zs = baseline_zeroshot(*evaluator);
    write_json(dir / "zeroshot.json", zs.to_json());
    summary["zeroshot"] = zs.to_json();
  }
  for (std::size_t k : cfg.pool_sizes) {
    const auto pool = load_candidate_pool(dir / pool_file_name(k), cands);
    std::unique_ptr<FitnessProvider> fit;
    if (evaluator) {
      fit = std::make_unique<LlmFitness>(*evaluator, pool);
    } else {
      fit = std::make_unique<SurrogateFitness>(pool, runner.seed("surrogate"));
    }
    const auto s = baseline_random(pool, cfg.ga.genome_length, cfg.baseline_draws, *fit,
                                   runner.seed(fmt::format("baseline:k{}", k)));
    write_json(dir / fmt::format("baseline_k{}.json", k), s.to_json());
    summary[fmt::format("k{}", k)] = s.to_json();
  }
  return summary;
}

}  // namespace grasp
