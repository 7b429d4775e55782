// csm-explorer: serves one fitted model over HTTP (see docs/api.md).

#include <csignal>
#include <iostream>
#include <memory>

#include "CLI11.hpp"

#include "csm/error.hpp"
#include "csm/explore.hpp"
#include "csm/serialization.hpp"

// After Eigen: httplib defines a `_res` macro that collides with Eigen internals.
#include "httplib.h"

namespace {
httplib::Server *g_server = nullptr;

void stop(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"HTTP explorer for a fitted shape model"};
  std::string model_path, host = "127.0.0.1";
  int port = 8080;
  int threads = 0;
  app.add_option("--model", model_path, "Model file")->required();
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  app.add_option("--threads", threads, "Worker threads (default: hardware)")
      ->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: UsageError: " << e.what() << "\n";
    return static_cast<int>(csm::ErrorCode::kUsage);
  }

  try {
    auto model = std::make_shared<const csm::JointModel>(csm::load_model(model_path));
    csm::explore::Service service(model);
    httplib::Server server;
    if (threads > 0) {
      server.new_task_queue = [threads] {
        return new httplib::ThreadPool(static_cast<std::size_t>(threads));
      };
    }
    service.install(server);

    if (port == 0) {
      port = server.bind_to_any_port(host);
    } else if (!server.bind_to_port(host, port)) {
      port = -1;
    }
    if (port < 0) csm::fail(csm::ErrorCode::kIoError, "cannot bind " + host);
    std::cout << "listening on http://" << host << ":" << port << std::endl;

    g_server = &server;
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    server.listen_after_bind();
  } catch (const csm::Error &e) {
    std::cerr << "error: " << e.class_name() << ": " << e.what() << "\n";
    return static_cast<int>(e.code());
  }
  return 0;
}
