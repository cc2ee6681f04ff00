#pragma once

#include <memory>
#include <string>

#include "msem/retrieval.hpp"

namespace msem {

// Minimal JSON-over-HTTP front end:
//   POST /query   {"text": string, "k": integer}
//   GET  /healthz
// A failed request only fails that request; the server keeps running.
class RetrievalService {
 public:
  explicit RetrievalService(const RetrievalArtifacts& artifacts);
  ~RetrievalService();

  // Blocks until stop(). Returns false if the address cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds to an OS-assigned port and serves on a background thread;
  // returns the port. Test helper.
  int start_async(const std::string& host);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace msem
