// Talks to a live server over loopback.
#include <doctest.h>

#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "progdf.h"
#include "service.hpp"
#include "session_fixture.hpp"

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

struct Live {
  pgdf_session* session = nullptr;
  std::unique_ptr<progdf_service::Server> server;
  unsigned short port = 0;

  Live() {
    if (pgdf_session_open(progdf_test::out_dir().c_str(), &session) != PGDF_OK) {
      throw std::runtime_error(pgdf_last_error());
    }
    progdf_service::ServeOptions o;
    o.port = 0;
    o.threads = 3;
    server = std::make_unique<progdf_service::Server>(session, o);
    port = server->start();
  }
  ~Live() {
    server.reset();
    pgdf_session_free(session);
  }
};

Live& live() {
  static Live l;
  return l;
}

http::response<http::string_body> request(http::verb verb, const std::string& target, const std::string& body = {}) {
  net::io_context ioc;
  beast::tcp_stream stream(ioc);
  stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), live().port));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "localhost");
  if (!body.empty()) {
    req.set(http::field::content_type, "application/json");
    req.body() = body;
  }
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return res;
}

std::string render_png(const std::string& body) {
  pgdf_bytes b{};
  REQUIRE(pgdf_session_render(live().session, body.c_str(), &b, nullptr) == PGDF_OK);
  std::string out(reinterpret_cast<const char*>(b.data), b.size);
  pgdf_bytes_free(&b);
  return out;
}

struct Ws {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};

  Ws() {
    ws.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), live().port));
    ws.handshake("localhost", "/api/stream");
  }
  ~Ws() {
    beast::error_code ec;
    ws.close(websocket::close_code::normal, ec);
  }
  // Returns (is_binary, payload).
  std::pair<bool, std::string> send(const std::string& text) {
    ws.text(true);
    ws.write(net::buffer(text));
    beast::flat_buffer buf;
    ws.read(buf);
    return {ws.got_binary(), beast::buffers_to_string(buf.data())};
  }
};

}  // namespace

TEST_CASE("http status mapping") {
  CHECK(progdf_service::http_status(PGDF_OK) == 200);
  CHECK(progdf_service::http_status(PGDF_ERR_NOT_FOUND) == 404);
  CHECK(progdf_service::http_status(PGDF_ERR_FORMAT) == 400);
  CHECK(progdf_service::http_status(PGDF_ERR_INVALID_ARGUMENT) == 400);
  CHECK(progdf_service::http_status(PGDF_ERR_INTERNAL) == 500);
}

TEST_CASE("GET /api/meta") {
  const auto res = request(http::verb::get, "/api/meta");
  CHECK(res.result_int() == 200);
  CHECK(res[http::field::content_type] == "application/json");
  const json m = json::parse(res.body());
  CHECK(m["scene"]["gaussians"] == 60);
  REQUIRE(m["edits"].size() == 1);
  CHECK(m["edits"][0]["id"] == "edit-0");
  CHECK(m["edits"][0]["region_size"].get<int>() > 0);
}

TEST_CASE("POST /api/render returns png and timings") {
  const std::string body = R"({"camera": {"azimuth": 20}, "controls": {"edit-0": 0.6}})";
  const auto res = request(http::verb::post, "/api/render", body);
  REQUIRE(res.result_int() == 200);
  CHECK(res[http::field::content_type] == "image/png");
  const std::string timing(res["Server-Timing"]);
  CHECK(timing.find("compose;dur=") != std::string::npos);
  CHECK(timing.find("render;dur=") != std::string::npos);
  CHECK(res.body() == render_png(body));
  // purity over the wire
  CHECK(request(http::verb::post, "/api/render", body).body() == res.body());
}

TEST_CASE("all sliders at zero give the original frame") {
  const auto zero = request(http::verb::post, "/api/render", R"({"controls": {"edit-0": 0}})");
  const auto none = request(http::verb::post, "/api/render", "{}");
  REQUIRE(zero.result_int() == 200);
  CHECK(zero.body() == none.body());
}

TEST_CASE("error statuses") {
  auto unknown = request(http::verb::post, "/api/render", R"({"controls": {"edit-9": 0.5}})");
  CHECK(unknown.result_int() == 404);
  CHECK(json::parse(unknown.body())["status"] == "not found");
  CHECK(request(http::verb::post, "/api/render", "{\"controls\":").result_int() == 400);
  CHECK(request(http::verb::post, "/api/render", R"({"camera": {"width": -1}})").result_int() == 400);
  CHECK(request(http::verb::get, "/api/nothing").result_int() == 404);
  CHECK(request(http::verb::get, "/api/render").result_int() == 405);
  CHECK(request(http::verb::post, "/api/meta", "{}").result_int() == 405);
  CHECK(request(http::verb::options, "/api/render").result_int() == 204);
}

TEST_CASE("concurrent http requests") {
  std::vector<std::string> bodies;
  for (int i = 0; i < 6; ++i) {
    bodies.push_back(json{{"camera", {{"azimuth", 30.0 * i}}}, {"controls", {{"edit-0", 0.2 * i}}}}.dump());
  }
  std::vector<std::string> got(bodies.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    threads.emplace_back([&, i] { got[i] = request(http::verb::post, "/api/render", bodies[i]).body(); });
  }
  for (auto& t : threads) t.join();
  for (std::size_t i = 0; i < bodies.size(); ++i) CHECK(got[i] == render_png(bodies[i]));
}

TEST_CASE("websocket stream applies deltas") {
  Ws ws;
  auto [bin1, f1] = ws.send(R"({"controls": {"edit-0": 0.5}})");
  CHECK(bin1);
  CHECK(f1 == render_png(R"({"controls": {"edit-0": 0.5}})"));

  auto [bin2, f2] = ws.send(R"({"camera": {"azimuth": 100}})");
  CHECK(bin2);
  CHECK(f2 == render_png(R"({"camera": {"azimuth": 100}, "controls": {"edit-0": 0.5}})"));

  // a bad delta is reported and does not stick
  auto [bin3, err] = ws.send(R"({"controls": {"edit-4": 1}})");
  CHECK_FALSE(bin3);
  CHECK(json::parse(err)["status"] == "not found");
  auto [bin4, err2] = ws.send("[1, 2]");
  CHECK_FALSE(bin4);
  CHECK(json::parse(err2)["status"] == "format error");

  auto [bin5, f5] = ws.send(R"({"controls": {"edit-0": 1}})");
  CHECK(bin5);
  CHECK(f5 == render_png(R"({"camera": {"azimuth": 100}, "controls": {"edit-0": 1}})"));
}

TEST_CASE("websocket only on /api/stream") {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};
  ws.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), live().port));
  beast::error_code ec;
  ws.handshake("localhost", "/api/other", ec);
  CHECK(ec);
}
