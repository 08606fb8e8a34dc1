#pragma once

#include <memory>
#include <string>

#include <json.hpp>

namespace lp {

struct HttpOptions {
  double timeout_seconds = 10.0;
  int attempts = 3;
  int backoff_ms = 50;  // doubled after every failed attempt
  int max_in_flight = 4;
};

// JSON-over-HTTP endpoint shared by the external oracles. Calls are
// thread-safe; at most max_in_flight requests are outstanding at once.
class HttpEndpoint {
 public:
  HttpEndpoint(const std::string& url, HttpOptions options);
  ~HttpEndpoint();
  HttpEndpoint(const HttpEndpoint&) = delete;
  HttpEndpoint& operator=(const HttpEndpoint&) = delete;

  // POSTs body to path. Retries transport failures and 5xx responses with
  // exponential backoff; throws OracleUnavailable once attempts run out, on
  // a 4xx (not retried) and when a 2xx body is not JSON.
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  nlohmann::json get(const std::string& path) const;

  const std::string& url() const { return url_; }

 private:
  struct Impl;
  std::string url_;
  HttpOptions options_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lp
