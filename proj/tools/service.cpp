#include "service.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <optional>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

namespace progdf_service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

int http_status(pgdf_status s) {
  switch (s) {
    case PGDF_OK: return 200;
    case PGDF_ERR_NOT_FOUND: return 404;
    case PGDF_ERR_FORMAT:
    case PGDF_ERR_INVALID_ARGUMENT: return 400;
    default: return 500;
  }
}

namespace {

constexpr std::size_t kBodyLimit = 1 << 20;

struct Frame {
  pgdf_status status = PGDF_OK;
  std::string error;
  std::string png;
  pgdf_render_timing timing{};
};

Frame render_frame(const pgdf_session* session, const std::string& body) {
  Frame f;
  pgdf_bytes out{nullptr, 0};
  f.status = pgdf_session_render(session, body.c_str(), &out, &f.timing);
  if (f.status != PGDF_OK) {
    f.error = pgdf_last_error();
    return f;
  }
  f.png.assign(reinterpret_cast<const char*>(out.data), out.size);
  pgdf_bytes_free(&out);
  return f;
}

std::string error_body(pgdf_status s, const std::string& msg) {
  return json{{"error", msg}, {"status", pgdf_status_name(s)}}.dump();
}

std::string server_timing(const pgdf_render_timing& t) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "compose;dur=%.3f, render;dur=%.3f", t.compose_ms, t.render_ms);
  return buf;
}

std::string path_of(beast::string_view target) {
  std::string p(target);
  const auto q = p.find('?');
  if (q != std::string::npos) p.resize(q);
  return p;
}

}  // namespace

struct Server::Impl {
  const pgdf_session* session;
  ServeOptions opts;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::optional<net::signal_set> signals;
  std::vector<std::thread> threads;

  Impl(const pgdf_session* s, ServeOptions o) : session(s), opts(std::move(o)), ioc(std::max(1, opts.threads)) {}

  void log(const std::string& msg) const {
    if (opts.log) opts.log(msg);
  }

  void do_accept();
  http::response<http::string_body> handle(const http::request<http::string_body>& req);
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, Server::Impl* srv) : ws_(std::move(socket)), srv_(srv) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kBodyLimit);
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    srv_->log("ws /api/stream open");
    do_read();
  }

  void do_read() {
    buffer_.consume(buffer_.size());
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      if (ec != websocket::error::closed) srv_->log("ws read: " + ec.message());
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    // A delta only sticks once it produced a frame.
    json next = state_;
    pgdf_status st = PGDF_OK;
    std::string err;
    try {
      const json delta = json::parse(text);
      if (!delta.is_object()) {
        st = PGDF_ERR_FORMAT;
        err = "request delta must be a JSON object";
      } else {
        next.merge_patch(delta);
      }
    } catch (const json::exception& e) {
      st = PGDF_ERR_FORMAT;
      err = std::string("malformed JSON: ") + e.what();
    }
    if (st == PGDF_OK) {
      Frame f = render_frame(srv_->session, next.dump());
      st = f.status;
      err = f.error;
      if (st == PGDF_OK) {
        state_ = std::move(next);
        out_ = std::move(f.png);
        ws_.binary(true);
      }
    }
    if (st != PGDF_OK) {
      out_ = error_body(st, err);
      ws_.text(true);
    }
    ws_.async_write(net::buffer(out_), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    do_read();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl* srv_;
  beast::flat_buffer buffer_;
  json state_ = json::object();
  std::string out_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Server::Impl* srv) : stream_(std::move(socket)), srv_(srv) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(kBodyLimit);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (ec) return;
    http::request<http::string_body> req = parser_->release();
    if (websocket::is_upgrade(req)) {
      if (path_of(req.target()) == "/api/stream") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), srv_)->run(std::move(req));
        return;
      }
    }
    res_ = srv_->handle(req);
    http::async_write(stream_, res_,
                      beast::bind_front_handler(&HttpSession::on_write, shared_from_this(), res_.need_eof()));
  }

  void on_write(bool close, beast::error_code ec, std::size_t) {
    if (ec) return;
    if (close) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    do_read();
  }

  beast::tcp_stream stream_;
  Server::Impl* srv_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  http::response<http::string_body> res_;
};

}  // namespace

void Server::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (!ec) {
      std::make_shared<HttpSession>(std::move(socket), this)->run();
    }
    if (acceptor.is_open()) do_accept();
  });
}

http::response<http::string_body> Server::Impl::handle(const http::request<http::string_body>& req) {
  const auto t0 = std::chrono::steady_clock::now();
  http::response<http::string_body> res;
  res.version(req.version());
  res.keep_alive(req.keep_alive());
  res.set(http::field::server, "progdf");
  res.set(http::field::access_control_allow_origin, "*");
  res.set(http::field::access_control_expose_headers, "Server-Timing");

  auto fail = [&](http::status code, pgdf_status st, const std::string& msg) {
    res.result(code);
    res.set(http::field::content_type, "application/json");
    res.body() = error_body(st, msg);
  };

  const std::string path = path_of(req.target());
  if (req.method() == http::verb::options) {
    res.result(http::status::no_content);
    res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
  } else if (path == "/api/meta") {
    if (req.method() != http::verb::get) {
      fail(http::status::method_not_allowed, PGDF_ERR_INVALID_ARGUMENT, "use GET");
    } else {
      char* meta = nullptr;
      const pgdf_status st = pgdf_session_meta(session, &meta);
      if (st != PGDF_OK) {
        fail(static_cast<http::status>(http_status(st)), st, pgdf_last_error());
      } else {
        res.result(http::status::ok);
        res.set(http::field::content_type, "application/json");
        res.body() = meta;
        pgdf_string_free(meta);
      }
    }
  } else if (path == "/api/render") {
    if (req.method() != http::verb::post) {
      fail(http::status::method_not_allowed, PGDF_ERR_INVALID_ARGUMENT, "use POST");
    } else {
      Frame f = render_frame(session, req.body());
      if (f.status != PGDF_OK) {
        fail(static_cast<http::status>(http_status(f.status)), f.status, f.error);
      } else {
        res.result(http::status::ok);
        res.set(http::field::content_type, "image/png");
        res.set("Server-Timing", server_timing(f.timing));
        res.body() = std::move(f.png);
      }
    }
  } else {
    fail(http::status::not_found, PGDF_ERR_NOT_FOUND, "no route for " + path);
  }
  res.prepare_payload();

  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  char line[64];
  std::snprintf(line, sizeof line, " %d %.1fms", res.result_int(), ms);
  log(std::string(req.method_string()) + " " + std::string(req.target()) + line);
  return res;
}

Server::Server(const pgdf_session* session, ServeOptions opts)
    : impl_(std::make_unique<Impl>(session, std::move(opts))) {}

Server::~Server() {
  stop();
  wait();
}

unsigned short Server::start() {
  Impl& s = *impl_;
  const tcp::endpoint ep(net::ip::make_address(s.opts.address), s.opts.port);
  s.acceptor.open(ep.protocol());
  s.acceptor.set_option(net::socket_base::reuse_address(true));
  s.acceptor.bind(ep);
  s.acceptor.listen(net::socket_base::max_listen_connections);
  s.do_accept();
  const int n = std::max(1, s.opts.threads);
  for (int i = 0; i < n; ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
  return s.acceptor.local_endpoint().port();
}

void Server::stop() {
  impl_->ioc.stop();
}

void Server::wait() {
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  impl_->threads.clear();
}

void Server::install_signal_handlers() {
  Impl& s = *impl_;
  s.signals.emplace(s.ioc, SIGINT, SIGTERM);
  s.signals->async_wait([&s](beast::error_code, int) { s.ioc.stop(); });
}

}  // namespace progdf_service
