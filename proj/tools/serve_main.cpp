#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "service.hpp"

namespace {
mouldmark::service::Service* running = nullptr;
void on_signal(int) {
  if (running) running->stop();
}
}  // namespace

int main(int argc, char** argv) {
  auto config = mouldmark::service::ServiceConfig::from_env();
  long long ttl = config.session_ttl.count();

  CLI::App app{"HTTP service for chain and laid line measurement"};
  app.footer(
      "Defaults come from MOULDMARK_HOST, MOULDMARK_PORT, MOULDMARK_MAX_UPLOAD_BYTES,\n"
      "MOULDMARK_SESSION_TTL_S and MOULDMARK_WORKERS; flags override them.");
  app.add_option("--host", config.host, "Bind address")->capture_default_str();
  app.add_option("--port", config.port, "Port, 0 picks a free one")->capture_default_str()->check(CLI::Range(0, 65535));
  app.add_option("--max-upload-bytes", config.max_upload_bytes, "Largest accepted image upload")
      ->capture_default_str();
  app.add_option("--session-ttl", ttl, "Idle seconds before a session expires")->capture_default_str();
  app.add_option("--workers", config.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  config.session_ttl = std::chrono::seconds(ttl);

  mouldmark::service::Service service(config);
  const int port = service.bind();
  if (port < 0) {
    std::cerr << "cannot bind " << config.host << ":" << config.port << "\n";
    return 1;
  }
  running = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << config.host << ":" << port << "\n";
  service.listen();
  return 0;
}
