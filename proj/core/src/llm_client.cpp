#include "grasp/llm_client.hpp"

#include "grasp/hash.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

namespace grasp {

using nlohmann::json;

const char* to_string(LlmErrorKind k) noexcept {
  switch (k) {
    case LlmErrorKind::authentication: return "authentication";
    case LlmErrorKind::rate_limit_exhausted: return "rate-limit-exhausted";
    case LlmErrorKind::request_rejected: return "request-rejected";
    case LlmErrorKind::malformed_response: return "malformed-response";
    case LlmErrorKind::dimension_mismatch: return "dimension-mismatch";
    case LlmErrorKind::invalid_request: return "invalid-request";
  }
  return "unknown";
}

void ChatRequest::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw LlmError(LlmErrorKind::invalid_request, "temperature must lie in [0, 2]");
  }
  if (system_prompt.empty() || user_prompt.empty()) {
    throw LlmError(LlmErrorKind::invalid_request, "prompts must be non-empty");
  }
  if (model.empty()) {
    throw LlmError(LlmErrorKind::invalid_request, "chat model is not configured");
  }
}

json ChatRequest::to_body() const {
  return json{{"model", model},
              {"messages", json::array({json{{"role", "system"}, {"content", system_prompt}},
                                        json{{"role", "user"}, {"content", user_prompt}}})},
              {"temperature", temperature},
              {"max_tokens", max_output_tokens}};
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return free_ > 0; });
  --free_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    ++free_;
  }
  cv_.notify_one();
}

namespace {

struct SlotGuard {
  InFlightLimiter& limiter;
  explicit SlotGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
  ~SlotGuard() { limiter.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;
};

bool retryable(int status) {
  return status == 0 || status == 408 || status == 409 || status == 429 || status >= 500;
}

std::string describe(const HttpResponse& r) {
  if (r.status == 0) return "transport failure" + (r.error.empty() ? "" : ": " + r.error);
  std::string body = r.body.substr(0, 200);
  return "HTTP " + std::to_string(r.status) + (body.empty() ? "" : ": " + body);
}

}  // namespace

LlmClient::LlmClient(ClientConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), limiter_(std::max<std::size_t>(1, cfg_.max_in_flight)) {
  if (!transport_) throw std::invalid_argument("LlmClient requires a transport");
  if (cfg_.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (cfg_.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (cfg_.embedding_batch_size < 1) throw std::invalid_argument("embedding_batch_size must be >= 1");
  dimension_ = cfg_.embedding_dimension;
}

ChatRequest LlmClient::request(std::string system_prompt, std::string user_prompt, double temperature) const {
  return ChatRequest{cfg_.chat_model, std::move(system_prompt), std::move(user_prompt), temperature,
                     cfg_.max_output_tokens};
}

HttpResponse LlmClient::send_with_retry(const std::string& path, const std::string& body) {
  const int max_attempts = cfg_.max_retries + 1;
  HttpResponse last;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    {
      SlotGuard slot(limiter_);
      last = transport_->post_json(path, body);
    }
    if (last.status >= 200 && last.status < 300) return last;
    if (last.status == 401 || last.status == 403) {
      throw LlmError(LlmErrorKind::authentication, "authentication failed (" + describe(last) + ")", attempt);
    }
    if (!retryable(last.status)) {
      throw LlmError(LlmErrorKind::request_rejected, "request rejected (" + describe(last) + ")", attempt);
    }
    if (attempt == max_attempts) break;

    std::chrono::milliseconds delay = cfg_.backoff_base * (std::int64_t{1} << std::min(attempt - 1, 20));
    if (last.retry_after) delay = std::max<std::chrono::milliseconds>(delay, *last.retry_after);
    delay = std::min<std::chrono::milliseconds>(delay, cfg_.backoff_cap);
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
  }
  throw LlmError(LlmErrorKind::rate_limit_exhausted,
                 "giving up after " + std::to_string(max_attempts) + " attempts (" + describe(last) + ")",
                 max_attempts);
}

std::string LlmClient::chat(const ChatRequest& req) {
  req.validate();
  const auto resp = send_with_retry("/chat/completions", req.to_body().dump());
  try {
    const auto j = json::parse(resp.body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw LlmError(LlmErrorKind::malformed_response, std::string("malformed chat response: ") + e.what());
  }
}

std::string LlmClient::cache_key(const std::string& text) const {
  return sha256_hex(cfg_.embedding_model + '\n' + text);
}

std::vector<EmbeddingVector> LlmClient::embed_batch(const std::vector<std::string>& texts) {
  for (const auto& t : texts) {
    if (t.empty()) throw LlmError(LlmErrorKind::invalid_request, "cannot embed an empty text");
  }
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) keys.push_back(cache_key(t));

  // Unique uncached texts, in first-occurrence order.
  std::vector<std::size_t> missing;
  {
    std::lock_guard lock(cache_mu_);
    std::unordered_map<std::string, bool> queued;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (cache_.count(keys[i]) == 0 && !queued[keys[i]]) {
        queued[keys[i]] = true;
        missing.push_back(i);
      }
    }
  }

  for (std::size_t start = 0; start < missing.size(); start += cfg_.embedding_batch_size) {
    const std::size_t end = std::min(missing.size(), start + cfg_.embedding_batch_size);
    json input = json::array();
    for (std::size_t m = start; m < end; ++m) input.push_back(texts[missing[m]]);
    const json body{{"model", cfg_.embedding_model}, {"input", std::move(input)}};
    const auto resp = send_with_retry("/embeddings", body.dump());

    std::vector<EmbeddingVector> vecs(end - start);
    try {
      const auto j = json::parse(resp.body);
      const auto& data = j.at("data");
      if (!data.is_array() || data.size() != vecs.size()) {
        throw LlmError(LlmErrorKind::malformed_response,
                       "embedding response holds " + std::to_string(data.size()) + " vectors, expected " +
                           std::to_string(vecs.size()));
      }
      for (std::size_t r = 0; r < data.size(); ++r) {
        const std::size_t idx = data[r].contains("index") ? data[r]["index"].get<std::size_t>() : r;
        if (idx >= vecs.size()) throw LlmError(LlmErrorKind::malformed_response, "embedding index out of range");
        vecs[idx].values = data[r].at("embedding").get<std::vector<double>>();
      }
    } catch (const json::exception& e) {
      throw LlmError(LlmErrorKind::malformed_response, std::string("malformed embedding response: ") + e.what());
    }

    std::lock_guard lock(cache_mu_);
    for (std::size_t r = 0; r < vecs.size(); ++r) {
      const auto& v = vecs[r].values;
      if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
        throw LlmError(LlmErrorKind::malformed_response, "embedding contains non-finite values");
      }
      if (dimension_ == 0) dimension_ = v.size();
      if (v.size() != dimension_) {
        throw LlmError(LlmErrorKind::dimension_mismatch, "embedding dimension " + std::to_string(v.size()) +
                                                             " != expected " + std::to_string(dimension_));
      }
    }
    for (std::size_t r = 0; r < vecs.size(); ++r) {
      cache_[keys[missing[start + r]]] = std::move(vecs[r]);
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::lock_guard lock(cache_mu_);
  for (const auto& k : keys) out.push_back(cache_.at(k));
  return out;
}

std::size_t LlmClient::cache_size() const {
  std::lock_guard lock(cache_mu_);
  return cache_.size();
}

void LlmClient::load_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;
  std::lock_guard lock(cache_mu_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    EmbeddingVector v{j.at("embedding").get<std::vector<double>>()};
    if (dimension_ == 0) dimension_ = v.dimension();
    if (v.dimension() != dimension_) {
      throw LlmError(LlmErrorKind::dimension_mismatch, "cached embedding has dimension " +
                                                           std::to_string(v.dimension()));
    }
    cache_[j.at("key").get<std::string>()] = std::move(v);
  }
}

void LlmClient::save_cache(const std::filesystem::path& path) const {
  std::lock_guard lock(cache_mu_);
  // Sorted for stable file contents.
  std::map<std::string, const EmbeddingVector*> sorted;
  for (const auto& [k, v] : cache_) sorted.emplace(k, &v);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write embedding cache " + tmp.string());
    for (const auto& [k, v] : sorted) {
      out << json{{"key", k}, {"embedding", v->values}}.dump() << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace grasp
