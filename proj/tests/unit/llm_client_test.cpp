#include "grasp/llm_client.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

namespace grasp {
namespace {

using nlohmann::json;

ClientConfig fast_config(int retries = 3) {
  ClientConfig c;
  c.chat_model = "chat-model";
  c.embedding_model = "embed-model";
  c.max_retries = retries;
  c.backoff_base = std::chrono::milliseconds(0);
  c.backoff_cap = std::chrono::milliseconds(0);
  return c;
}

std::vector<double> unit_vector(const std::string& text, std::size_t dim = 4) {
  std::vector<double> v(dim, 0.0);
  v[fnv1a64(text) % dim] = 1.0;
  return v;
}

std::shared_ptr<MockTransport> embedding_mock(std::size_t dim = 4) {
  return std::make_shared<MockTransport>([dim](const std::string& path, const json& body) {
    EXPECT_EQ(path, "/embeddings");
    std::vector<std::vector<double>> out;
    for (const auto& t : body.at("input")) out.push_back(unit_vector(t.get<std::string>(), dim));
    return MockTransport::embedding_reply(out);
  });
}

TEST(Chat, PassesThroughReply) {
  auto mock = std::make_shared<MockTransport>([](const std::string& path, const json& body) {
    EXPECT_EQ(path, "/chat/completions");
    EXPECT_EQ(body.at("model"), "chat-model");
    EXPECT_EQ(body.at("messages").size(), 2u);
    return MockTransport::chat_reply("ok");
  });
  LlmClient client(fast_config(), mock);
  EXPECT_EQ(client.chat(client.request("sys", "user", 0.0)), "ok");
  EXPECT_EQ(mock->calls(), 1u);
}

TEST(Chat, RetriesTransientFailures) {
  std::atomic<int> n{0};
  auto mock = std::make_shared<MockTransport>([&](const std::string&, const json&) {
    return ++n <= 2 ? MockTransport::status(503) : MockTransport::chat_reply("done");
  });
  LlmClient client(fast_config(3), mock);
  EXPECT_EQ(client.chat(client.request("s", "u", 0.0)), "done");
  EXPECT_EQ(mock->calls(), 3u);
}

TEST(Chat, ExhaustsRetries) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json&) { return MockTransport::status(429); });
  LlmClient client(fast_config(2), mock);
  try {
    client.chat(client.request("s", "u", 0.0));
    FAIL() << "expected LlmError";
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmErrorKind::rate_limit_exhausted);
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(mock->calls(), 3u);
}

TEST(Chat, AuthenticationIsNotRetried) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json&) { return MockTransport::status(401); });
  LlmClient client(fast_config(5), mock);
  try {
    client.chat(client.request("s", "u", 0.0));
    FAIL() << "expected LlmError";
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmErrorKind::authentication);
  }
  EXPECT_EQ(mock->calls(), 1u);
}

TEST(Chat, ClientErrorIsRejectedWithoutRetry) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json&) { return MockTransport::status(400); });
  LlmClient client(fast_config(5), mock);
  try {
    client.chat(client.request("s", "u", 0.0));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmErrorKind::request_rejected);
  }
  EXPECT_EQ(mock->calls(), 1u);
}

TEST(Chat, MalformedBody) {
  auto mock = std::make_shared<MockTransport>(
      [](const std::string&, const json&) { return MockTransport::status(200, R"({"choices":[]})"); });
  LlmClient client(fast_config(), mock);
  try {
    client.chat(client.request("s", "u", 0.0));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmErrorKind::malformed_response);
  }
}

TEST(Chat, InvalidRequests) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json&) { return MockTransport::chat_reply("x"); });
  LlmClient client(fast_config(), mock);
  EXPECT_THROW(client.chat(client.request("s", "u", 2.5)), LlmError);
  EXPECT_THROW(client.chat(client.request("", "u", 0.5)), LlmError);
  EXPECT_EQ(mock->calls(), 0u);
}

TEST(Chat, BackoffHonoursRetryAfterUpToCap) {
  std::atomic<int> n{0};
  auto mock = std::make_shared<MockTransport>([&](const std::string&, const json&) {
    if (++n == 1) {
      auto r = MockTransport::status(429);
      r.retry_after = std::chrono::milliseconds(60'000);
      return r;
    }
    return MockTransport::chat_reply("ok");
  });
  auto cfg = fast_config(2);
  cfg.backoff_cap = std::chrono::milliseconds(50);
  LlmClient client(cfg, mock);
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(client.chat(client.request("s", "u", 0.0)), "ok");
  const auto waited = std::chrono::steady_clock::now() - t0;
  EXPECT_GE(waited, std::chrono::milliseconds(50));
  EXPECT_LT(waited, std::chrono::seconds(5));
}

TEST(EmbedBatch, EmptyInput) {
  auto mock = embedding_mock();
  LlmClient client(fast_config(), mock);
  EXPECT_TRUE(client.embed_batch({}).empty());
  EXPECT_EQ(mock->calls(), 0u);
}

TEST(EmbedBatch, DuplicateTextsShareOneCall) {
  auto mock = embedding_mock();
  LlmClient client(fast_config(), mock);
  const auto v = client.embed_batch({"a", "a"});
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], v[1]);
  EXPECT_EQ(v[0].values, unit_vector("a"));
  EXPECT_EQ(mock->calls(), 1u);
  client.embed_batch({"a"});
  EXPECT_EQ(mock->calls(), 1u);
}

TEST(EmbedBatch, DimensionMismatch) {
  auto mock = std::make_shared<MockTransport>([](const std::string&, const json& body) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < body.at("input").size(); ++i) out.push_back(std::vector<double>(2 + i, 1.0));
    return MockTransport::embedding_reply(out);
  });
  LlmClient client(fast_config(), mock);
  try {
    client.embed_batch({"a", "b"});
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmErrorKind::dimension_mismatch);
  }
}

TEST(EmbedBatch, RespectsBatchSize) {
  auto mock = embedding_mock();
  auto cfg = fast_config();
  cfg.embedding_batch_size = 3;
  LlmClient client(cfg, mock);
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back("t" + std::to_string(i));
  EXPECT_EQ(client.embed_batch(texts).size(), 10u);
  EXPECT_EQ(mock->calls(), 4u);
}

TEST(EmbedBatch, CachingIsInvisibleProperty) {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> x, y;
    const auto nx = 1 + rng.index(6), ny = 1 + rng.index(6);
    for (std::size_t i = 0; i < nx; ++i) x.push_back("x" + std::to_string(trial) + "-" + std::to_string(i));
    for (std::size_t i = 0; i < ny; ++i) y.push_back("y" + std::to_string(trial) + "-" + std::to_string(i));
    auto xy = x;
    xy.insert(xy.end(), y.begin(), y.end());

    LlmClient joint(fast_config(), embedding_mock(8));
    LlmClient split(fast_config(), embedding_mock(8));
    const auto all = joint.embed_batch(xy);
    auto parts = split.embed_batch(x);
    const auto py = split.embed_batch(y);
    parts.insert(parts.end(), py.begin(), py.end());
    EXPECT_EQ(all, parts);
  }
}

TEST(EmbedBatch, CacheFileRoundTrip) {
  const auto dir = testing::temp_dir("embed_cache");
  auto mock = embedding_mock();
  LlmClient a(fast_config(), mock);
  const auto va = a.embed_batch({"p", "q"});
  a.save_cache(dir / "cache.jsonl");

  auto mock2 = embedding_mock();
  LlmClient b(fast_config(), mock2);
  b.load_cache(dir / "cache.jsonl");
  EXPECT_EQ(b.cache_size(), 2u);
  EXPECT_EQ(b.embed_batch({"q", "p"}), (std::vector<EmbeddingVector>{va[1], va[0]}));
  EXPECT_EQ(mock2->calls(), 0u);
}

TEST(Concurrency, NeverExceedsMaxInFlight) {
  auto mock = std::make_shared<MockTransport>(
      [](const std::string&, const json&) { return MockTransport::chat_reply("ok"); }, std::chrono::milliseconds(5));
  auto cfg = fast_config();
  cfg.max_in_flight = 3;
  LlmClient client(cfg, mock);
  std::vector<std::thread> threads;
  for (int t = 0; t < 12; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i) client.chat(client.request("s", "u", 0.0));
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(mock->calls(), 60u);
  EXPECT_LE(mock->peak_in_flight(), 3u);
  EXPECT_GE(mock->peak_in_flight(), 2u);
}

TEST(HttpTransport, UnreachableEndpointIsStatusZero) {
  TransportConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1";
  cfg.connect_timeout = std::chrono::milliseconds(500);
  HttpTransport t(cfg);
  const auto r = t.post_json("/chat/completions", "{}");
  EXPECT_EQ(r.status, 0);
  EXPECT_FALSE(r.error.empty());
}

TEST(HttpTransport, RejectsEndpointWithoutScheme) {
  TransportConfig cfg;
  cfg.endpoint = "localhost:8000";
  EXPECT_THROW(HttpTransport{cfg}, std::invalid_argument);
}

}  // namespace
}  // namespace grasp
