#include "grasp/llm_client.hpp"

#include <thread>

namespace grasp {

using nlohmann::json;

MockTransport::MockTransport(Handler handler, std::chrono::milliseconds latency)
    : handler_(std::move(handler)), latency_(latency) {}

HttpResponse MockTransport::post_json(const std::string& path, const std::string& body) {
  ++calls_;
  const std::size_t now = ++in_flight_;
  std::size_t prev = peak_.load();
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  HttpResponse r;
  try {
    r = handler_(path, json::parse(body));
  } catch (...) {
    --in_flight_;
    throw;
  }
  --in_flight_;
  return r;
}

HttpResponse MockTransport::chat_reply(const std::string& content) {
  json j{{"object", "chat.completion"},
         {"choices", json::array({json{{"index", 0},
                                       {"message", json{{"role", "assistant"}, {"content", content}}},
                                       {"finish_reason", "stop"}}})}};
  return HttpResponse{200, j.dump(), std::nullopt, {}};
}

HttpResponse MockTransport::embedding_reply(const std::vector<std::vector<double>>& vectors) {
  json data = json::array();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    data.push_back(json{{"object", "embedding"}, {"index", i}, {"embedding", vectors[i]}});
  }
  return HttpResponse{200, json{{"object", "list"}, {"data", std::move(data)}}.dump(), std::nullopt, {}};
}

HttpResponse MockTransport::status(int code, std::string body) {
  return HttpResponse{code, std::move(body), std::nullopt, {}};
}

}  // namespace grasp
