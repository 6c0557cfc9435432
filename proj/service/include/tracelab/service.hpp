#pragma once

// JSON-over-HTTP session service for the phase-space explorer. handle() is the
// whole request pipeline; serve() only adapts it to sockets.

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace tracelab {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8765;
  std::string allowed_origin = "http://127.0.0.1:5173";
  std::size_t orbit_n_cap = 1000000;
  int chaos_res_cap = 256;
  std::size_t chaos_n_cap = 5000;
  std::size_t transport_points = 50000;
  unsigned max_inflight = 8;  // concurrent compute requests before 503
  unsigned workers = 0;
};

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
  std::map<std::string, std::string> headers;
};

struct DownsampleInfo {
  std::size_t original = 0;
  std::size_t kept = 0;
  std::size_t stride = 1;
};

/// Stride-uniform indices into [0, n) keeping the first and last, at most max_points.
std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t max_points, DownsampleInfo* info = nullptr);

class Service {
public:
  explicit Service(ServiceOptions opts = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body,
                      const std::string& session = "default", const std::string& origin = "");

  /// Blocks serving HTTP until stop() is called.
  bool serve();
  void stop();

  const ServiceOptions& options() const { return opts_; }

private:
  struct Job {
    std::string status = "pending";
    nlohmann::json result;
    std::thread worker;
  };
  struct Session {
    std::mutex mu;
    std::map<std::string, nlohmann::json> cache;
    std::map<std::string, std::shared_ptr<Job>> jobs;
  };

  HttpResponse route(const std::string& method, const std::string& path, const nlohmann::json& body, Session& s);
  HttpResponse orbit(const nlohmann::json& body);
  HttpResponse chaos(const nlohmann::json& body);
  HttpResponse manifold(const nlohmann::json& body);
  HttpResponse tangency_scan(const nlohmann::json& body, Session& s, const std::string& key);
  HttpResponse job_status(const std::string& id, Session& s);
  HttpResponse meta() const;
  Session& session(const std::string& id);

  ServiceOptions opts_;
  std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::atomic<unsigned> inflight_{0};
  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace tracelab
