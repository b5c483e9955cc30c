#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace mouldmark::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  std::size_t max_upload_bytes = 100u * 1024u * 1024u;
  std::chrono::seconds session_ttl{1800};
  int workers = 4;

  /// Reads MOULDMARK_HOST, MOULDMARK_PORT, MOULDMARK_MAX_UPLOAD_BYTES,
  /// MOULDMARK_SESSION_TTL_S and MOULDMARK_WORKERS over the defaults.
  static ServiceConfig from_env();
};

/// HTTP facade: image sessions, calibration, cached decompositions,
/// detection reports with omission edits, PNG artifacts.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the configured address; returns the bound port or -1.
  int bind();
  /// Blocks serving requests until stop().
  void listen();
  /// bind() then listen() on a background thread; returns the bound port.
  int start_background();
  void stop();

  std::size_t session_count() const;
  httplib::Server& server();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace mouldmark::service
