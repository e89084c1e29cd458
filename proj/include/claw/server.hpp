// Copyright 2026 The CLAW Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP + WebSocket front end for a SessionManager.
//
//   GET    /api/sessions                  descriptor list
//   POST   /api/sessions[?time_scale=s&pacing=lockstep]
//                                         body: scenario config, 201 + descriptor
//   GET    /api/sessions/{id}             descriptor
//   GET    /api/sessions/{id}/episode     episode CSV
//   DELETE /api/sessions/{id}             204
//   GET    /api/sessions/{id}/stream?role=leader|observer
//                                         WebSocket upgrade; one text message
//                                         per newline-terminated JSON line
//   GET    /...                           static files from static_dir
//
// Errors are JSON: {"error": {"code", "field", "message"}} with status 400
// (bad input), 404 (unknown session), 409 (commander conflict, finished
// session) or 503 (capacity).

#ifndef CLAW_SERVER_HPP_
#define CLAW_SERVER_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "claw/service.hpp"

namespace claw::server {

struct ServerOptions {
  std::string bind = "127.0.0.1:8080";  // host:port; port 0 picks a free one
  std::optional<std::filesystem::path> static_dir;
  int io_threads = 2;
};

// Splits "host:port" (or ":port", meaning all interfaces). Throws
// Error(kInvalidArgument, field "bind").
std::pair<std::string, std::uint16_t> parse_bind(const std::string& bind);

// HTTP status for a domain error code.
int http_status(ErrorCode code);

class Server {
 public:
  Server(service::SessionManager& manager, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts the I/O threads. Throws Error(kIo) if binding fails.
  void start();
  // Bound port, valid after start().
  std::uint16_t port() const;
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace claw::server

#endif  // CLAW_SERVER_HPP_
