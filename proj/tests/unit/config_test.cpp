#include "grasp/config.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

namespace grasp {
namespace {

using nlohmann::json;

std::filesystem::path write_inputs(const std::string& name) {
  const auto dir = testing::temp_dir(name);
  std::ofstream(dir / "pool.jsonl") << R"({"id":"a","text":"x","entities":{"R":["1"]}})" << "\n";
  return dir;
}

TEST(InterpolateEnv, ReplacesAndRejectsUnset) {
  ::setenv("GRASP_TEST_SECRET", "s3cret", 1);
  ::unsetenv("GRASP_TEST_MISSING");
  EXPECT_EQ(interpolate_env("Bearer ${GRASP_TEST_SECRET}!"), "Bearer s3cret!");
  EXPECT_EQ(interpolate_env("no vars $HOME {x}"), "no vars $HOME {x}");
  EXPECT_THROW(interpolate_env("${GRASP_TEST_MISSING}"), ConfigError);
}

TEST(ParseConfig, ReadsSectionsAndResolvesPaths) {
  const auto dir = write_inputs("config_parse");
  ::setenv("GRASP_TEST_MODEL", "big-model", 1);
  const json j = json::parse(R"({
    "seed": 11,
    "fitness_mode": "surrogate",
    "output_dir": "out",
    "pool_sizes": [50, 5],
    "data": {"examples": "pool.jsonl", "n_validation": 0},
    "client": {"chat_model": "${GRASP_TEST_MODEL}", "timeout_seconds": 1.5, "max_in_flight": 3},
    "clustering": {"min_cluster_size": 4, "min_samples": 2, "epsilon": 0.5},
    "ga": {"mu": 7, "lambda": 9, "shots": 3, "p_cx": 0.2, "p_mut": 0.6},
    "projection": {"method": "in-repo-linear", "target_dimension": 4},
    "baseline": {"n_draws": 5}
  })");
  const auto cfg = parse_config(j, dir);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.output_dir, dir / "out");
  EXPECT_EQ(cfg.data.examples, dir / "pool.jsonl");
  EXPECT_EQ(cfg.pool_sizes, (std::vector<std::size_t>{50, 5}));
  EXPECT_EQ(cfg.client.chat_model, "big-model");
  EXPECT_EQ(cfg.transport.request_timeout, std::chrono::milliseconds(1500));
  EXPECT_EQ(cfg.client.max_in_flight, 3u);
  EXPECT_EQ(cfg.clustering.min_samples, 2u);
  EXPECT_EQ(cfg.ga.genome_length, 3u);
  EXPECT_EQ(cfg.ga.lambda, 9u);
  EXPECT_EQ(cfg.projection.target_dimension, 4u);
  EXPECT_EQ(cfg.baseline_draws, 5u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ParseConfig, DefaultsMatchReferenceRun) {
  const auto cfg = parse_config(json::object(), ".");
  EXPECT_EQ(cfg.clustering.min_cluster_size, 9u);
  EXPECT_EQ(cfg.clustering.min_samples, 1u);
  EXPECT_DOUBLE_EQ(cfg.clustering.epsilon, 0.18);
  EXPECT_EQ(cfg.ga.mu, 80u);
  EXPECT_EQ(cfg.ga.lambda, 180u);
  EXPECT_EQ(cfg.ga.max_generations, 20u);
  EXPECT_DOUBLE_EQ(cfg.ga.p_cx, 0.30);
  EXPECT_DOUBLE_EQ(cfg.ga.p_mut, 0.50);
  EXPECT_EQ(cfg.ga.tournament_size, 3u);
  EXPECT_DOUBLE_EQ(cfg.ga.p_min, 0.05);
  EXPECT_DOUBLE_EQ(cfg.ga.p_max, 0.70);
  EXPECT_EQ(cfg.ga.genome_length, 5u);
  EXPECT_EQ(cfg.projection.target_dimension, 20u);
  EXPECT_DOUBLE_EQ(cfg.generation.base_temperature, 0.7);
  EXPECT_DOUBLE_EQ(cfg.generation.temperature_jitter, 0.2);
  EXPECT_EQ(cfg.generation.batch_size, 20u);
  EXPECT_EQ(cfg.pool_sizes, (std::vector<std::size_t>{500, 5000}));
}

TEST(Validate, Errors) {
  const auto dir = write_inputs("config_validate");
  auto base = json::parse(R"({"data": {"examples": "pool.jsonl"}})");
  EXPECT_NO_THROW(parse_config(base, dir).validate());

  auto j = base;
  j["data"]["examples"] = "missing.jsonl";
  EXPECT_THROW(parse_config(j, dir).validate(), ConfigError);

  EXPECT_THROW(parse_config(json::object(), dir).validate(), ConfigError);

  j = base;
  j["pool_sizes"] = {5, 5};
  EXPECT_THROW(parse_config(j, dir).validate(), ConfigError);

  j = base;
  j["ga"] = {{"p_cx", 0.8}, {"p_mut", 0.8}};
  EXPECT_THROW(parse_config(j, dir).validate(), ConfigError);

  j = base;
  j["fitness_mode"] = "llm";
  EXPECT_THROW(parse_config(j, dir).validate(), ConfigError);

  j = base;
  j["fitness_mode"] = "oracle";
  EXPECT_THROW(parse_config(j, dir), ConfigError);

  j = base;
  j["projection"] = {{"method", "precomputed-import"}};
  EXPECT_THROW(parse_config(j, dir).validate(), ConfigError);

  j = base;
  j["clustering"] = {{"min_cluster_size", 1}};
  EXPECT_THROW(parse_config(j, dir).validate(), ConfigError);

  j = base;
  j["ga"] = {{"mu", "many"}};
  EXPECT_THROW(parse_config(j, dir), ConfigError);
}

TEST(SnapshotHash, IgnoresOutputDirButTracksInputs) {
  const auto dir = write_inputs("config_hash");
  auto j = json::parse(R"({"seed": 1, "data": {"examples": "pool.jsonl"}, "output_dir": "a"})");
  const auto h1 = parse_config(j, dir).snapshot_hash();
  j["output_dir"] = "b";
  EXPECT_EQ(parse_config(j, dir).snapshot_hash(), h1);
  j["seed"] = 2;
  EXPECT_NE(parse_config(j, dir).snapshot_hash(), h1);
  j["seed"] = 1;
  std::ofstream(dir / "pool.jsonl", std::ios::app) << R"({"id":"b","text":"y"})" << "\n";
  EXPECT_NE(parse_config(j, dir).snapshot_hash(), h1);
}

TEST(LoadConfig, AcceptsCommentsAndReportsSyntaxErrors) {
  const auto dir = write_inputs("config_load");
  std::ofstream(dir / "ok.json") << "{\n  // surrogate run\n  \"data\": {\"examples\": \"pool.jsonl\"}\n}\n";
  std::ofstream(dir / "bad.json") << "{\"data\": ";
  EXPECT_EQ(load_config(dir / "ok.json").data.examples, dir / "pool.jsonl");
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "absent.json"), ConfigError);
}

}  // namespace
}  // namespace grasp
