#include "latentpatch/http.hpp"

#include <chrono>
#include <regex>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "latentpatch/core/error.hpp"

namespace lp {

struct HttpEndpoint::Impl {
  std::string host;
  int port = 80;
  std::counting_semaphore<1024> in_flight;

  explicit Impl(int limit) : in_flight(std::max(1, std::min(limit, 1024))) {}
};

namespace {

struct SlotGuard {
  std::counting_semaphore<1024>& sem;
  explicit SlotGuard(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

}  // namespace

HttpEndpoint::HttpEndpoint(const std::string& url, HttpOptions options)
    : url_(url), options_(options), impl_(std::make_unique<Impl>(options.max_in_flight)) {
  static const std::regex re(R"(^http://([^/:]+)(?::(\d+))?/?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw InvalidArgument("endpoint must look like http://host[:port], got '" + url + "'");
  }
  impl_->host = m[1];
  impl_->port = m[2].matched ? std::stoi(m[2]) : 80;
  if (options_.attempts < 1) throw InvalidArgument("http attempts must be >= 1");
}

HttpEndpoint::~HttpEndpoint() = default;

namespace {

template <typename Call>
nlohmann::json with_retries(const std::string& what, const HttpOptions& options, Call&& call) {
  std::string last_error;
  int backoff = options.backoff_ms;
  for (int attempt = 1; attempt <= options.attempts; ++attempt) {
    httplib::Result res = call();
    if (res) {
      if (res->status >= 200 && res->status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
          throw OracleUnavailable(what + ": response is not JSON: " + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status >= 400 && res->status < 500) {
        throw OracleUnavailable(what + ": rejected with " + last_error + ": " + res->body);
      }
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < options.attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
  }
  throw OracleUnavailable(what + ": failed after " + std::to_string(options.attempts) +
                          " attempts (" + last_error + ")");
}

httplib::Client make_client(const std::string& host, int port, const HttpOptions& options) {
  httplib::Client cli(host, port);
  auto secs = static_cast<time_t>(options.timeout_seconds);
  auto usecs = static_cast<time_t>((options.timeout_seconds - secs) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  return cli;
}

}  // namespace

nlohmann::json HttpEndpoint::post(const std::string& path, const nlohmann::json& body) const {
  SlotGuard slot(impl_->in_flight);
  const std::string payload = body.dump();
  return with_retries(url_ + path, options_, [&] {
    auto cli = make_client(impl_->host, impl_->port, options_);
    return cli.Post(path, payload, "application/json");
  });
}

nlohmann::json HttpEndpoint::get(const std::string& path) const {
  SlotGuard slot(impl_->in_flight);
  return with_retries(url_ + path, options_, [&] {
    auto cli = make_client(impl_->host, impl_->port, options_);
    return cli.Get(path);
  });
}

}  // namespace lp
