#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace grasp {

struct HttpResponse {
  int status = 0;  // 0 means the request never completed (connect/read failure)
  std::string body;
  std::optional<std::chrono::milliseconds> retry_after;
  std::string error;
};

/// POSTs a JSON body to a path relative to the service endpoint.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post_json(const std::string& path, const std::string& body) = 0;
};

struct TransportConfig {
  std::string endpoint = "http://localhost:8000/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds connect_timeout{10'000};
  std::chrono::milliseconds request_timeout{300'000};
};

/// OpenAI-compatible REST transport over cpp-httplib. The bearer token is read
/// from the configured environment variable at construction and kept in memory only.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(TransportConfig cfg);
  ~HttpTransport() override;

  HttpResponse post_json(const std::string& path, const std::string& body) override;

 private:
  TransportConfig cfg_;
  std::string scheme_host_port_;
  std::string base_path_;
  std::string token_;
};

/// In-process transport driven by a handler. Thread-safe; records the call
/// count and the peak number of simultaneously outstanding calls.
class MockTransport : public Transport {
 public:
  using Handler = std::function<HttpResponse(const std::string& path, const nlohmann::json& body)>;

  explicit MockTransport(Handler handler, std::chrono::milliseconds latency = {});

  HttpResponse post_json(const std::string& path, const std::string& body) override;

  std::size_t calls() const noexcept { return calls_; }
  std::size_t peak_in_flight() const noexcept { return peak_; }

  static HttpResponse chat_reply(const std::string& content);
  static HttpResponse embedding_reply(const std::vector<std::vector<double>>& vectors);
  static HttpResponse status(int code, std::string body = "{}");

 private:
  Handler handler_;
  std::chrono::milliseconds latency_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_{0};
};

enum class LlmErrorKind {
  authentication,
  rate_limit_exhausted,
  request_rejected,
  malformed_response,
  dimension_mismatch,
  invalid_request,
};

const char* to_string(LlmErrorKind k) noexcept;

class LlmError : public std::runtime_error {
 public:
  LlmError(LlmErrorKind kind, const std::string& what, int attempts = 0)
      : std::runtime_error(what), kind_(kind), attempts_(attempts) {}

  LlmErrorKind kind() const noexcept { return kind_; }
  int attempts() const noexcept { return attempts_; }

 private:
  LlmErrorKind kind_;
  int attempts_;
};

struct ClientConfig {
  std::string chat_model;
  std::string embedding_model;
  int max_retries = 5;
  std::size_t max_in_flight = 8;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{30'000};
  std::size_t max_output_tokens = 4096;
  std::size_t embedding_batch_size = 64;
  std::size_t embedding_dimension = 0;  // 0: take the dimension of the first response
};

struct ChatRequest {
  std::string model;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  std::size_t max_output_tokens = 4096;

  /// Throws LlmError(invalid_request) when an invariant is violated.
  void validate() const;
  nlohmann::json to_body() const;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dimension() const noexcept { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Counting semaphore bounding outstanding requests.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t slots) : free_(slots) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t free_;
};

class LlmClient {
 public:
  LlmClient(ClientConfig cfg, std::shared_ptr<Transport> transport);

  const ClientConfig& config() const noexcept { return cfg_; }

  /// Request prefilled with the configured chat model and token budget.
  ChatRequest request(std::string system_prompt, std::string user_prompt, double temperature) const;

  /// Returns choices[0].message.content; transient failures are retried with
  /// exponential backoff up to max_retries.
  std::string chat(const ChatRequest& req);

  /// One vector per text, in input order. Results are cached by content hash.
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);

  std::size_t cache_size() const;
  void load_cache(const std::filesystem::path& path);
  void save_cache(const std::filesystem::path& path) const;

 private:
  HttpResponse send_with_retry(const std::string& path, const std::string& body);
  std::string cache_key(const std::string& text) const;

  ClientConfig cfg_;
  std::shared_ptr<Transport> transport_;
  InFlightLimiter limiter_;
  mutable std::mutex cache_mu_;
  std::unordered_map<std::string, EmbeddingVector> cache_;
  std::size_t dimension_ = 0;
};

}  // namespace grasp
