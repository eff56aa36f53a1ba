#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

namespace lumen::service {

struct ServiceOptions {
  std::string cors_origin;               // empty disables CORS headers
  std::size_t max_scenario_areas = 50000;  // larger cities get 413 on POST /api/scenario
  std::chrono::seconds session_ttl{1800};
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

// JSON-over-HTTP view of a workspace plus in-memory scenario sessions. The
// workspace is read once at construction and never written.
class Service {
 public:
  Service(std::filesystem::path workspace, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Dispatches one request without a socket. `query` holds decoded query
  // parameters; `headers` the relevant request headers.
  Response handle(const std::string& method, const std::string& path, const std::string& body = {},
                  const std::map<std::string, std::string>& query = {},
                  const std::map<std::string, std::string>& headers = {});

  // Binds host:port (port 0 picks a free port) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop() is called.
  void listen(const std::string& host, int port);
  void stop();
  int port() const;

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lumen::service
