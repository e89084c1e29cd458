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

#include "claw/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "claw/config_io.hpp"
#include "claw/episode.hpp"
#include "json.hpp"

namespace claw::server {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

constexpr std::size_t kMaxWsMessage = 256 * 1024;
constexpr auto kExpiryPeriod = std::chrono::seconds(60);

std::string_view sv(beast::string_view s) { return {s.data(), s.size()}; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::optional<std::string> percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%') {
      if (i + 2 >= s.size()) return std::nullopt;
      const int hi = hex_value(s[i + 1]);
      const int lo = hex_value(s[i + 2]);
      if (hi < 0 || lo < 0) return std::nullopt;
      out.push_back(static_cast<char>(hi * 16 + lo));
      i += 2;
    } else if (s[i] == '+') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

struct Target {
  std::string path;
  std::map<std::string, std::string> query;
};

std::optional<Target> split_target(std::string_view target) {
  Target t;
  const auto q = target.find('?');
  auto path = percent_decode(target.substr(0, q));
  if (!path) return std::nullopt;
  t.path = *path;
  if (q == std::string_view::npos) return t;
  std::string_view rest = target.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const std::string_view pair = rest.substr(0, amp);
    const auto eq = pair.find('=');
    auto key = percent_decode(pair.substr(0, eq));
    auto value = percent_decode(eq == std::string_view::npos ? "" : pair.substr(eq + 1));
    if (!key || !value) return std::nullopt;
    if (!key->empty()) t.query[*key] = *value;
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return t;
}

std::vector<std::string> segments(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    const auto j = path.find('/', i);
    const std::string part = path.substr(i, j == std::string::npos ? std::string::npos : j - i);
    if (!part.empty()) out.push_back(part);
    if (j == std::string::npos) break;
    i = j + 1;
  }
  return out;
}

Response make_response(const Request& req, http::status status, std::string body,
                       std::string_view content_type) {
  Response res{status, req.version()};
  res.set(http::field::server, "claw");
  res.set(http::field::content_type, beast::string_view(content_type.data(), content_type.size()));
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response json_response(const Request& req, http::status status, std::string body) {
  return make_response(req, status, std::move(body), "application/json");
}

Response error_response(const Request& req, http::status status, std::string_view code,
                        const std::string& message, const std::string& field = {}) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"field", field}, {"message", message}};
  return json_response(req, status, j.dump());
}

Response error_response(const Request& req, const Error& e) {
  return error_response(req, static_cast<http::status>(http_status(e.code())),
                        error_code_name(e.code()), e.what(), e.field());
}

std::string_view mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".csv") return "text/csv";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

std::optional<service::Pacing> pacing_from(const Target& t, const service::Pacing& base) {
  service::Pacing p = base;
  bool set = false;
  if (auto it = t.query.find("time_scale"); it != t.query.end()) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != it->second.size()) {
      throw Error(ErrorCode::kInvalidArgument, "time_scale must be a number", "time_scale");
    }
    p.time_scale = v;
    set = true;
  }
  if (auto it = t.query.find("pacing"); it != t.query.end()) {
    if (it->second == "lockstep") {
      p.lockstep = true;
    } else if (it->second == "realtime") {
      p.lockstep = false;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "pacing must be realtime or lockstep", "pacing");
    }
    set = true;
  }
  if (!set) return std::nullopt;
  service::validate(p);
  return p;
}

struct Context {
  service::SessionManager& manager;
  ServerOptions options;
};

// --- WebSocket client ----------------------------------------------------------

class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  WsClient(tcp::socket&& socket, std::shared_ptr<service::Session> session, service::Role role)
      : ws_(std::move(socket)), session_(std::move(session)), role_(role) {}

  ~WsClient() {
    if (client_) session_->detach(*client_);
  }

  void start(Request req) {
    req_ = std::move(req);
    std::weak_ptr<WsClient> weak = weak_from_this();
    service::ClientSink sink;
    sink.send = [weak](std::string line) {
      if (auto self = weak.lock()) {
        net::post(self->ws_.get_executor(),
                  [self, l = std::move(line)]() mutable { self->enqueue(std::move(l)); });
      }
    };
    sink.close = [weak] {
      if (auto self = weak.lock()) {
        net::post(self->ws_.get_executor(), [self] { self->close_after_flush(); });
      }
    };
    try {
      client_ = session_->attach(role_, std::move(sink));
    } catch (const Error& e) {
      reject(error_response(req_, e));
      return;
    }
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kMaxWsMessage);
    ws_.text(true);
    ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->fail();
      self->accepted_ = true;
      self->write_next();
      self->read();
    });
  }

 private:
  void reject(Response res) {
    auto r = std::make_shared<Response>(std::move(res));
    r->keep_alive(false);
    http::async_write(ws_.next_layer(), *r,
                      [self = shared_from_this(), r](beast::error_code, std::size_t) {
                        beast::error_code ignored;
                        self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_send,
                                                                 ignored);
                      });
  }

  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->fail();
      std::string bytes = beast::buffers_to_string(self->in_.data());
      self->in_.consume(self->in_.size());
      // A message is a whole number of lines; tolerate a missing final newline.
      if (!bytes.empty() && bytes.back() != '\n') bytes.push_back('\n');
      self->session_->deliver(*self->client_, bytes);
      self->read();
    });
  }

  void enqueue(std::string line) {
    if (done_ || close_requested_) return;
    out_.push_back(std::move(line));
    if (!writing_) write_next();
  }

  void close_after_flush() {
    close_requested_ = true;
    if (!writing_) write_next();
  }

  void write_next() {
    if (!accepted_ || done_) return;
    if (out_.empty()) {
      writing_ = false;
      if (close_requested_) {
        done_ = true;
        ws_.async_close(websocket::close_code::normal,
                        [self = shared_from_this()](beast::error_code) {});
      }
      return;
    }
    writing_ = true;
    ws_.async_write(net::buffer(out_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->fail();
                      self->out_.pop_front();
                      self->write_next();
                    });
  }

  void fail() {
    done_ = true;
    out_.clear();
    if (client_) {
      session_->detach(*client_);
      client_.reset();
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<service::Session> session_;
  service::Role role_;
  Request req_;
  std::optional<service::ClientId> client_;
  beast::flat_buffer in_;
  std::deque<std::string> out_;
  bool accepted_ = false;
  bool writing_ = false;
  bool close_requested_ = false;
  bool done_ = false;
};

// --- HTTP connection -------------------------------------------------------------

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, Context& ctx) : stream_(std::move(socket)), ctx_(ctx) {}

  void start() { read(); }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(1 << 20);
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, *parser_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) return shutdown();
    if (ec) return;
    Request req = parser_->release();
    if (websocket::is_upgrade(req)) return upgrade(std::move(req));
    Response res;
    try {
      res = handle(req);
    } catch (const Error& e) {
      res = error_response(req, e);
    } catch (const std::exception& e) {
      res = error_response(req, http::status::internal_server_error, "internal-error", e.what());
    }
    write(std::move(res));
  }

  void write(Response res) {
    auto r = std::make_shared<Response>(std::move(res));
    http::async_write(stream_, *r,
                      [self = shared_from_this(), r](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (r->need_eof()) return self->shutdown();
                        self->read();
                      });
  }

  void shutdown() {
    beast::error_code ignored;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
  }

  void upgrade(Request req) {
    const auto target = split_target(sv(req.target()));
    const auto parts = target ? segments(target->path) : std::vector<std::string>{};
    if (parts.size() != 4 || parts[0] != "api" || parts[1] != "sessions" || parts[3] != "stream") {
      return write(error_response(req, http::status::not_found, "not-found",
                                  "no WebSocket endpoint at this path"));
    }
    service::Role role = service::Role::kObserver;
    if (auto it = target->query.find("role"); it != target->query.end()) {
      if (it->second == "leader") {
        role = service::Role::kLeader;
      } else if (it->second != "observer") {
        return write(error_response(req, http::status::bad_request, "invalid-argument",
                                    "role must be leader or observer", "role"));
      }
    }
    std::shared_ptr<service::Session> session;
    try {
      session = ctx_.manager.find(parts[2]);
    } catch (const Error& e) {
      return write(error_response(req, e));
    }
    stream_.expires_never();
    std::make_shared<WsClient>(stream_.release_socket(), std::move(session), role)
        ->start(std::move(req));
  }

  Response handle(const Request& req) {
    const auto target = split_target(sv(req.target()));
    if (!target) {
      return error_response(req, http::status::bad_request, "invalid-argument",
                            "malformed request target");
    }
    const auto parts = segments(target->path);
    if (!parts.empty() && parts[0] == "api") return handle_api(req, *target, parts);
    return handle_static(req, target->path);
  }

  Response method_not_allowed(const Request& req) {
    return error_response(req, http::status::method_not_allowed, "method-not-allowed",
                          std::string(sv(req.method_string())) + " not allowed here");
  }

  Response handle_api(const Request& req, const Target& target,
                      const std::vector<std::string>& parts) {
    auto& manager = ctx_.manager;
    if (parts.size() < 2 || parts[1] != "sessions" || parts.size() > 4) {
      return error_response(req, http::status::not_found, "not-found", "no such endpoint");
    }
    if (parts.size() == 2) {
      if (req.method() == http::verb::get) {
        return json_response(req, http::status::ok, service::descriptors_json(manager.list()));
      }
      if (req.method() == http::verb::post) {
        const std::optional<service::Pacing> pacing = pacing_from(target, manager.options().pacing);
        const scenario::ScenarioConfig config = config::parse_config(req.body());
        const auto session = manager.create(config, pacing);
        return json_response(req, http::status::created,
                             service::descriptor_json(session->descriptor()));
      }
      return method_not_allowed(req);
    }
    const std::string& id = parts[2];
    if (parts.size() == 3) {
      if (req.method() == http::verb::get) {
        return json_response(req, http::status::ok,
                             service::descriptor_json(manager.find(id)->descriptor()));
      }
      if (req.method() == http::verb::delete_) {
        manager.remove(id);
        Response res{http::status::no_content, req.version()};
        res.set(http::field::server, "claw");
        res.keep_alive(req.keep_alive());
        res.prepare_payload();
        return res;
      }
      return method_not_allowed(req);
    }
    if (parts[3] == "episode") {
      if (req.method() != http::verb::get) return method_not_allowed(req);
      return make_response(req, http::status::ok,
                           episode::write_episode(manager.find(id)->episode()), "text/csv");
    }
    if (parts[3] == "stream") {
      manager.find(id);
      return error_response(req, http::status::upgrade_required, "upgrade-required",
                            "connect with a WebSocket client");
    }
    return error_response(req, http::status::not_found, "not-found", "no such endpoint");
  }

  Response handle_static(const Request& req, const std::string& path) {
    if (req.method() != http::verb::get && req.method() != http::verb::head) {
      return method_not_allowed(req);
    }
    if (!ctx_.options.static_dir) {
      return error_response(req, http::status::not_found, "not-found", "no static assets");
    }
    for (const std::string& part : segments(path)) {
      if (part == ".." || part.find('\\') != std::string::npos) {
        return error_response(req, http::status::bad_request, "invalid-argument",
                              "path escapes the asset root");
      }
    }
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path root = fs::weakly_canonical(*ctx_.options.static_dir, ec);
    fs::path file = root / fs::path(path).relative_path();
    if (fs::is_directory(file, ec)) file /= "index.html";
    file = fs::weakly_canonical(file, ec);
    const auto rel = file.lexically_relative(root);
    if (ec || rel.empty() || *rel.begin() == "..") {
      return error_response(req, http::status::bad_request, "invalid-argument",
                            "path escapes the asset root");
    }
    std::ifstream in(file, std::ios::binary);
    if (!in || !fs::is_regular_file(file, ec)) {
      return error_response(req, http::status::not_found, "not-found", "no such file");
    }
    std::ostringstream body;
    body << in.rdbuf();
    Response res = make_response(req, http::status::ok, body.str(), mime_type(file));
    if (req.method() == http::verb::head) res.body().clear();
    return res;
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  Context& ctx_;
};

}  // namespace

std::pair<std::string, std::uint16_t> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "bind must look like host:port", "bind");
  }
  std::string host = bind.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }
  if (host.empty()) host = "0.0.0.0";
  const std::string port = bind.substr(colon + 1);
  std::size_t used = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (port.empty() || used != port.size() || value > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "bad port '" + port + "'", "bind");
  }
  return {host, static_cast<std::uint16_t>(value)};
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession: return 404;
    case ErrorCode::kCommanderConflict:
    case ErrorCode::kSessionTerminal: return 409;
    case ErrorCode::kCapacityExceeded: return 503;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

struct Server::Impl {
  Impl(service::SessionManager& manager, ServerOptions options)
      : ctx{manager, std::move(options)}, acceptor(ioc), expiry(ioc) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
      if (ec == net::error::operation_aborted) return;
      if (!ec) std::make_shared<HttpConnection>(std::move(s), ctx)->start();
      accept();
    });
  }

  void schedule_expiry() {
    expiry.expires_after(kExpiryPeriod);
    expiry.async_wait([this](beast::error_code ec) {
      if (ec) return;
      ctx.manager.expire();
      schedule_expiry();
    });
  }

  Context ctx;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::steady_timer expiry;
  std::vector<std::thread> threads;
  std::uint16_t port = 0;
  std::mutex mu;
  std::condition_variable cv;
  bool running = false;
};

Server::Server(service::SessionManager& manager, ServerOptions options)
    : impl_(std::make_unique<Impl>(manager, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  const auto [host, port] = parse_bind(impl_->ctx.options.bind);
  beast::error_code ec;
  const auto address = net::ip::make_address(host, ec);
  if (ec) throw Error(ErrorCode::kInvalidArgument, "bad bind address '" + host + "'", "bind");
  const tcp::endpoint endpoint{address, port};
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot listen on " + impl_->ctx.options.bind + ": " + ec.message());
  }
  impl_->port = acc.local_endpoint().port();
  impl_->accept();
  impl_->schedule_expiry();
  {
    std::lock_guard lk(impl_->mu);
    impl_->running = true;
  }
  const int n = std::max(1, impl_->ctx.options.io_threads);
  for (int i = 0; i < n; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

std::uint16_t Server::port() const { return impl_->port; }

void Server::stop() {
  {
    std::lock_guard lk(impl_->mu);
    if (!impl_->running && impl_->threads.empty()) return;
    impl_->running = false;
  }
  impl_->cv.notify_all();
  net::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->expiry.cancel();
  });
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  impl_->threads.clear();
}

void Server::wait() {
  std::unique_lock lk(impl_->mu);
  impl_->cv.wait(lk, [&] { return !impl_->running; });
}

}  // namespace claw::server
