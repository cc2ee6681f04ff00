#include "msem/service.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "msem/errors.hpp"

namespace msem {

using nlohmann::json;

struct RetrievalService::Impl {
  const RetrievalArtifacts& artifacts;
  httplib::Server server;
  std::thread worker;

  explicit Impl(const RetrievalArtifacts& a) : artifacts(a) {
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      json body = {{"status", "ok"}, {"items", artifacts.item_count()}};
      res.set_content(body.dump(), "application/json");
    });
    server.Post("/query", [this](const httplib::Request& req, httplib::Response& res) {
      const auto t0 = std::chrono::steady_clock::now();
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        res.status = 400;
        res.set_content(json{{"error", std::string("malformed JSON: ") + e.what()}}.dump(),
                        "application/json");
        return;
      }
      std::string text;
      int64_t k = 1;
      try {
        text = body.at("text").get<std::string>();
        k = body.value("k", int64_t{1});
      } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", std::string("bad request body: ") + e.what()}}.dump(),
                        "application/json");
        return;
      }
      if (k < 1) {
        res.status = 400;
        res.set_content(json{{"error", "k must be >= 1"}}.dump(), "application/json");
        return;
      }
      try {
        const QueryResult result = artifacts.answer_query(text, k);
        json hits = json::array();
        for (const auto& h : result) {
          hits.push_back({{"id", h.id},
                          {"question", h.question},
                          {"answer", h.answer},
                          {"score", h.score},
                          {"cosine", h.cosine}});
        }
        const double latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        res.set_content(json{{"results", hits}, {"latency_ms", latency_ms}}.dump(),
                        "application/json");
      } catch (const DataError& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    });
  }
};

RetrievalService::RetrievalService(const RetrievalArtifacts& artifacts)
    : impl_(std::make_unique<Impl>(artifacts)) {}

RetrievalService::~RetrievalService() { stop(); }

bool RetrievalService::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int RetrievalService::start_async(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) throw IoError("cannot bind service on " + host);
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void RetrievalService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace msem
