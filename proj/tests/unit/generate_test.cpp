#include "grasp/generate.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <regex>
#include <set>

namespace grasp {
namespace {

using nlohmann::json;

struct BatchRequest {
  bool negative = false;
  std::size_t count = 0;
  double temperature = 0.0;
  std::string prompt;
};

BatchRequest decode(const json& body) {
  BatchRequest r;
  r.prompt = body.at("messages").at(1).at("content").get<std::string>();
  r.temperature = body.at("temperature").get<double>();
  r.negative = r.prompt.find("NO value") != std::string::npos;
  std::smatch m;
  std::regex_search(r.prompt, m, std::regex("Write (\\d+) distinct"));
  r.count = std::stoul(m[1]);
  return r;
}

// Well-behaved generator: `count` records respecting the stream, text
// derived from the prompt and temperature.
HttpResponse good_reply(const BatchRequest& r) {
  json arr = json::array();
  for (std::size_t i = 0; i < r.count; ++i) {
    const auto tag = fnv1a64(r.prompt + std::to_string(r.temperature)) % 100000;
    json rec{{"text", "sentence " + std::to_string(tag) + "-" + std::to_string(i) + (r.negative ? "n" : "p")}};
    rec["entities"] = r.negative ? json::object() : json{{"Revenue", {std::to_string(i + 1)}}};
    arr.push_back(rec);
  }
  return MockTransport::chat_reply(arr.dump());
}

ClientConfig client_config() {
  ClientConfig c;
  c.chat_model = "m";
  c.max_retries = 0;
  c.backoff_base = std::chrono::milliseconds(0);
  c.max_in_flight = 4;
  return c;
}

GenerationConfig gen_config(std::size_t n_total, double fraction = 1.0) {
  GenerationConfig g;
  g.n_total = n_total;
  g.positive_fraction = fraction;
  g.labels = {"Revenue"};
  g.seed = 5;
  return g;
}

TEST(DrawTemperature, ZeroJitterIsExact) {
  auto g = gen_config(20);
  g.temperature_jitter = 0.0;
  for (std::size_t b = 0; b < 10; ++b) EXPECT_EQ(draw_temperature(g, 1, b), 0.7);
}

TEST(DrawTemperature, WithinJitterBand) {
  auto g = gen_config(20);
  for (std::size_t b = 0; b < 1000; ++b) {
    const double t = draw_temperature(g, 3, b);
    EXPECT_GE(t, 0.5);
    EXPECT_LE(t, 0.9);
  }
}

TEST(DrawTemperature, Deterministic) {
  auto g = gen_config(20);
  EXPECT_EQ(draw_temperature(g, 9, 4), draw_temperature(g, 9, 4));
  EXPECT_NE(draw_temperature(g, 9, 4), draw_temperature(g, 9, 5));
}

TEST(PlanBatches, SplitsStreams) {
  const auto plan = plan_batches(gen_config(40, 0.5));
  ASSERT_EQ(plan.size(), 2u);
  EXPECT_EQ(plan[0].stream, Stream::positive);
  EXPECT_EQ(plan[0].count, 20u);
  EXPECT_EQ(plan[1].stream, Stream::negative);
  EXPECT_EQ(plan[1].count, 20u);
}

TEST(PlanBatches, BatchArithmeticProperty) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    GenerationConfig g;
    g.n_total = 1 + rng.index(500);
    g.batch_size = 1 + rng.index(40);
    g.positive_fraction = rng.uniform();
    const auto plan = plan_batches(g);
    const auto n_pos = static_cast<std::size_t>(std::llround(g.n_total * g.positive_fraction));
    std::size_t pos = 0, neg = 0, pos_batches = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      EXPECT_EQ(plan[i].index, i);
      EXPECT_LE(plan[i].count, g.batch_size);
      EXPECT_GE(plan[i].count, 1u);
      (plan[i].stream == Stream::positive ? pos : neg) += plan[i].count;
      pos_batches += plan[i].stream == Stream::positive;
    }
    EXPECT_EQ(pos, n_pos);
    EXPECT_EQ(pos + neg, g.n_total);
    EXPECT_EQ(pos_batches, (n_pos + g.batch_size - 1) / g.batch_size);
  }
}

TEST(ParseBatchReply, AcceptsFencesAndWrappers) {
  EXPECT_TRUE(parse_batch_reply(R"([{"text":"a"}])"));
  EXPECT_TRUE(parse_batch_reply("```json\n[{\"text\":\"a\"}]\n```"));
  EXPECT_TRUE(parse_batch_reply(R"(Here you go: [{"text":"a"}] thanks)"));
  EXPECT_TRUE(parse_batch_reply(R"({"examples":[{"text":"a"}]})"));
  EXPECT_FALSE(parse_batch_reply("no json at all"));
  EXPECT_FALSE(parse_batch_reply(R"({"text":"a"})"));
}

TEST(GeneratePool, SingleCleanBatch) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json& b) { return good_reply(decode(b)); });
  LlmClient client(client_config(), mock);
  const auto r = generate_pool(gen_config(20), {"chunk"}, client);
  EXPECT_EQ(r.examples.size(), 20u);
  EXPECT_EQ(r.report.rejected, 0u);
  EXPECT_EQ(r.report.parsed_ok, 20u);
  EXPECT_EQ(mock->calls(), 1u);
  for (const auto& e : r.examples) EXPECT_EQ(e.provenance, Provenance::synthetic);
}

TEST(GeneratePool, EntitiesInNegativeStreamRejected) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json& b) {
    const auto r = decode(b);
    if (!r.negative) return good_reply(r);
    json arr = json::array();
    arr.push_back({{"text", "clean negative"}, {"entities", json::object()}});
    arr.push_back({{"text", "leaky negative"}, {"entities", {{"Revenue", {"3"}}}}});
    return MockTransport::chat_reply(arr.dump());
  });
  LlmClient client(client_config(), mock);
  const auto r = generate_pool(gen_config(40, 0.5), {"chunk"}, client);
  EXPECT_EQ(r.report.rejected, 1u);
  EXPECT_EQ(r.report.rejected_by_reason.at("stream-constraint"), 1u);
  EXPECT_EQ(r.report.negative.emitted, 1u);
}

TEST(GeneratePool, RejectsMalformedAndDuplicateRecords) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json&) {
    json arr = json::array();
    arr.push_back({{"text", "ok"}, {"entities", {{"Revenue", {"1"}}}}});
    arr.push_back({{"text", "ok"}, {"entities", {{"Revenue", {"2"}}}}});
    arr.push_back({{"entities", {{"Revenue", {"1"}}}}});
    arr.push_back({{"text", "empty value"}, {"entities", {{"Revenue", {""}}}}});
    return MockTransport::chat_reply(arr.dump());
  });
  LlmClient client(client_config(), mock);
  const auto r = generate_pool(gen_config(20), {"chunk"}, client);
  EXPECT_EQ(r.examples.size(), 1u);
  EXPECT_EQ(r.report.rejected_by_reason.at("duplicate-text"), 1u);
  EXPECT_EQ(r.report.rejected_by_reason.at("schema"), 2u);
}

TEST(GeneratePool, ExtraRecordsAreOverQuota) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json& b) {
    auto r = decode(b);
    r.count += 3;
    return good_reply(r);
  });
  LlmClient client(client_config(), mock);
  const auto r = generate_pool(gen_config(10), {"chunk"}, client);
  EXPECT_EQ(r.examples.size(), 10u);
  EXPECT_EQ(r.report.rejected_by_reason.at("over-quota"), 3u);
}

TEST(GeneratePool, UnparseableReplyRetriedOnce) {
  std::atomic<int> n{0};
  auto mock = std::make_shared<MockTransport>([&](const std::string&, const json& b) {
    return ++n == 1 ? MockTransport::chat_reply("sorry, I cannot") : good_reply(decode(b));
  });
  LlmClient client(client_config(), mock);
  const auto r = generate_pool(gen_config(20), {"chunk"}, client);
  EXPECT_EQ(r.examples.size(), 20u);
  EXPECT_EQ(r.report.parse_retries, 1u);
  EXPECT_EQ(mock->calls(), 2u);
}

TEST(GeneratePool, FailedBatchesTalliedAndSkipped) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json& b) {
    const auto r = decode(b);
    return r.negative ? MockTransport::status(500) : good_reply(r);
  });
  LlmClient client(client_config(), mock);
  const auto r = generate_pool(gen_config(40, 0.5), {"chunk"}, client);
  EXPECT_EQ(r.examples.size(), 20u);
  EXPECT_EQ(r.report.batches_client_error, 1u);
  EXPECT_EQ(r.report.negative.batches_failed, 1u);
}

TEST(GeneratePool, NoSuccessfulBatchIsFatal) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json&) { return MockTransport::status(503); });
  LlmClient client(client_config(), mock);
  EXPECT_THROW(generate_pool(gen_config(40, 0.5), {"chunk"}, client), GenerationError);
}

TEST(GeneratePool, StreamConstraintAndFreshIdsProperty) {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    auto mock = std::make_shared<MockTransport>([&](const std::string&, const json& b) {
      auto r = decode(b);
      json arr = json::array();
      for (std::size_t i = 0; i < r.count; ++i) {
        const bool flip = (fnv1a64(r.prompt + std::to_string(i)) % 5) == 0;
        const bool with_entities = r.negative == flip;
        arr.push_back({{"text", r.prompt.substr(0, 20) + std::to_string(r.temperature) + "#" + std::to_string(i)},
                       {"entities", with_entities ? json{{"X", {"v"}}} : json::object()}});
      }
      return MockTransport::chat_reply(arr.dump());
    });
    LlmClient client(client_config(), mock);
    auto g = gen_config(20 + rng.index(100), rng.uniform());
    g.batch_size = 1 + rng.index(15);
    g.seed = rng.next();
    const auto r = generate_pool(g, {"alpha", "beta", "gamma"}, client);
    std::set<std::string> ids;
    for (const auto& e : r.examples) {
      EXPECT_TRUE(ids.insert(e.id).second);
      if (e.id.find("-p") != std::string::npos) {
        EXPECT_GE(e.entities.size(), 1u);
      } else {
        EXPECT_TRUE(e.entities.empty());
      }
    }
    EXPECT_EQ(r.report.parsed_ok + r.report.rejected, r.report.records_emitted);
  }
}

TEST(GeneratePool, DeterministicPerSeed) {
  auto run = [] {
    auto mock = std::make_shared<MockTransport>([](const std::string&, const json& b) { return good_reply(decode(b)); });
    LlmClient client(client_config(), mock);
    auto g = gen_config(100, 0.6);
    g.batch_size = 7;
    return generate_pool(g, {"one", "two"}, client).examples;
  };
  EXPECT_EQ(run(), run());
}

TEST(RenderTemplate, ReplacesAllOccurrences) {
  EXPECT_EQ(render_template("{{a}}-{{b}}-{{a}}", {{"a", "x"}, {"b", "{{a}}"}}), "x-{{a}}-x");
}

}  // namespace
}  // namespace grasp
