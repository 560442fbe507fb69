#include "grasp/llm_client.hpp"

#include <httplib.h>

#include <cstdlib>

namespace grasp {

HttpTransport::HttpTransport(TransportConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint must include a scheme: " + cfg_.endpoint);
  }
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = cfg_.endpoint.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : cfg_.endpoint.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str())) token_ = key;
  }
}

HttpTransport::~HttpTransport() = default;

HttpResponse HttpTransport::post_json(const std::string& path, const std::string& body) {
  httplib::Client cli(scheme_host_port_);
  const auto secs = [](std::chrono::milliseconds ms) {
    return std::pair<time_t, time_t>(ms.count() / 1000, (ms.count() % 1000) * 1000);
  };
  auto [cs, cus] = secs(cfg_.connect_timeout);
  auto [rs, rus] = secs(cfg_.request_timeout);
  cli.set_connection_timeout(cs, cus);
  cli.set_read_timeout(rs, rus);
  cli.set_write_timeout(rs, rus);

  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  auto res = cli.Post(base_path_ + path, headers, body, "application/json");
  HttpResponse out;
  if (!res) {
    out.status = 0;
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  if (res->has_header("Retry-After")) {
    try {
      out.retry_after = std::chrono::milliseconds(
          static_cast<long long>(std::stod(res->get_header_value("Retry-After")) * 1000.0));
    } catch (const std::exception&) {
      // HTTP-date form; fall back to computed backoff.
    }
  }
  return out;
}

}  // namespace grasp
