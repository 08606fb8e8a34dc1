#pragma once

// In-process oracle server on 127.0.0.1 speaking the external wire protocol,
// backed by the toy models. Failure modes are switchable per test.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "latentpatch/core/base64.hpp"
#include "latentpatch/core/latent.hpp"
#include "latentpatch/core/png_io.hpp"
#include "latentpatch/generator/generator.hpp"
#include "latentpatch/oracles/oracles.hpp"
#include "latentpatch/oracles/wire.hpp"

namespace ref {

enum class Fault { none, unavailable, bad_request, malformed, not_json };

class LoopbackServer {
 public:
  explicit LoopbackServer(std::filesystem::path samples = {}) : samples_(std::move(samples)) {
    if (!samples_.empty()) std::filesystem::create_directories(samples_);
    srv_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      ++requests;
      reply(res, "health_response",
            {{"status", "ok"},
             {"models", {{"detector", "toy"}, {"classifier", "toy"}, {"generator", "toy"}}},
             {"thresholds", {{"score", det_->spec().score_threshold}}}});
    });
    srv_.Post("/detect", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, "detect", [this](const nlohmann::json& body) {
        return lp::wire::detect_response(det_->detect(lp::wire::request_image(body)));
      });
    });
    srv_.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, "classify", [this](const nlohmann::json& body) {
        return lp::wire::classify_response(cls_->classify(lp::wire::request_image(body)));
      });
    });
    srv_.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, "generate", [this](const nlohmann::json& body) {
        lp::LatentVector z(body.at("latent").get<std::vector<double>>());
        return lp::wire::generate_response(gen_->generate(z));
      });
    });
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~LoopbackServer() {
    srv_.stop();
    thread_.join();
  }
  LoopbackServer(const LoopbackServer&) = delete;
  LoopbackServer& operator=(const LoopbackServer&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }

  std::atomic<Fault> fault{Fault::none};
  std::atomic<int> fail_first{0};  // answer 503 to this many requests first
  std::atomic<int> requests{0};

 private:
  template <class F>
  void handle(const httplib::Request& req, httplib::Response& res, const std::string& kind, F answer) {
    const int n = ++requests;
    if (n <= fail_first.load() || fault == Fault::unavailable) {
      res.status = 503;
      reply(res, "error_response", {{"error", "model unavailable"}});
      return;
    }
    if (fault == Fault::not_json) {
      res.set_content("<html>oops</html>", "text/html");
      return;
    }
    if (fault == Fault::malformed) {
      res.set_content(R"({"detections": [{"x": 1}], "probs": [2.0]})", "application/json");
      return;
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
      if (fault == Fault::bad_request) throw std::runtime_error("rejected by fault injection");
      record(kind + "_request", body);
      reply(res, kind + "_response", answer(body));
    } catch (const std::exception& e) {
      res.status = 400;
      reply(res, "error_response", {{"error", std::string("malformed request: ") + e.what()}});
    }
  }

  void reply(httplib::Response& res, const std::string& kind, const nlohmann::json& body) {
    record(kind, body);
    res.set_content(body.dump(), "application/json");
  }

  void record(const std::string& kind, const nlohmann::json& body) {
    if (samples_.empty()) return;
    std::lock_guard lock(mu_);
    int& n = counts_[kind];
    if (n >= 3) return;
    std::ofstream(samples_ / (kind + "_" + std::to_string(n++) + ".json")) << body.dump(1);
  }

  std::unique_ptr<lp::Detector> det_ = lp::make_detector(lp::DetectorSpec{});
  std::unique_ptr<lp::Classifier> cls_ = lp::make_classifier(lp::ClassifierSpec{});
  std::unique_ptr<lp::Generator> gen_ = lp::make_generator(lp::GeneratorSpec{});
  httplib::Server srv_;
  std::thread thread_;
  int port_ = 0;
  std::filesystem::path samples_;
  std::mutex mu_;
  std::map<std::string, int> counts_;
};

}  // namespace ref
