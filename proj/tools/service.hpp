#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "progdf.h"

namespace progdf_service {

struct ServeOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  int threads = 2;
  std::function<void(const std::string&)> log;
};

// HTTP + WebSocket front end over a loaded session.
//   GET  /api/meta    session metadata (JSON)
//   POST /api/render  RenderRequest JSON -> image/png, Server-Timing header
//   WS   /api/stream  each text message is a JSON merge-patch applied to the
//                     connection's current RenderRequest; reply is a binary
//                     PNG frame, or a text {"error", "status"} message
// The session is borrowed and must outlive the server.
class Server {
 public:
  Server(const pgdf_session* session, ServeOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts the worker threads. Returns the bound port.
  unsigned short start();
  void stop();
  // Blocks until stop() (or a signal, when install_signal_handlers was used).
  void wait();
  void install_signal_handlers();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

// HTTP status for a library status code.
int http_status(pgdf_status s);

}  // namespace progdf_service
