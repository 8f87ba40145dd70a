// progdf command-line driver. Talks to the engine through the C API only.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "progdf.h"
#include "service.hpp"

namespace {

int report(pgdf_status st, const char* what) {
  if (st != PGDF_OK) std::fprintf(stderr, "progdf %s: %s\n", what, pgdf_last_error());
  return static_cast<int>(st);
}

void log_line(const char* msg, void*) { std::fprintf(stderr, "%s\n", msg); }

int write_file(const std::string& path, const pgdf_bytes& b) {
  std::ofstream out(path, std::ios::binary);
  if (out) out.write(reinterpret_cast<const char*>(b.data), static_cast<std::streamsize>(b.size));
  if (!out) {
    std::fprintf(stderr, "progdf: cannot write %s\n", path.c_str());
    return PGDF_ERR_IO;
  }
  return PGDF_OK;
}

struct PipelineArgs {
  std::string scene, edit, out, config;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int run_pipeline(const PipelineArgs& a) {
  pgdf_pipeline_options o{};
  o.scene_path = a.scene.c_str();
  o.edit_path = a.edit.c_str();
  o.config_path = a.config.empty() ? nullptr : a.config.c_str();
  o.out_dir = a.out.c_str();
  o.override_seed = a.seed.has_value();
  o.seed = a.seed.value_or(0);
  o.log = a.quiet ? nullptr : log_line;
  return report(pgdf_pipeline(&o), "pipeline");
}

struct ServeArgs {
  std::string session, address = "127.0.0.1";
  unsigned short port = 8080;
  int threads = 2;
  bool quiet = false;
};

int run_serve(const ServeArgs& a) {
  pgdf_session* s = nullptr;
  if (pgdf_status st = pgdf_session_open(a.session.c_str(), &s); st != PGDF_OK) return report(st, "serve");
  int rc = 0;
  try {
    progdf_service::ServeOptions opts;
    opts.address = a.address;
    opts.port = a.port;
    opts.threads = a.threads;
    if (!a.quiet) opts.log = [](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); };
    progdf_service::Server server(s, opts);
    server.install_signal_handlers();
    const unsigned short port = server.start();
    std::printf("serving %s on http://%s:%u\n", a.session.c_str(), a.address.c_str(), port);
    std::fflush(stdout);
    server.wait();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "progdf serve: %s\n", e.what());
    rc = PGDF_ERR_IO;
  }
  pgdf_session_free(s);
  return rc;
}

struct RenderArgs {
  std::string session, out, request;
  std::vector<std::string> controls;  // id=u
  std::optional<double> azimuth, elevation;
  std::optional<int> width, height;
};

int run_render(const RenderArgs& a) {
  nlohmann::json req = nlohmann::json::object();
  if (!a.request.empty()) {
    std::ifstream in(a.request);
    if (!in) {
      std::fprintf(stderr, "progdf render: cannot read %s\n", a.request.c_str());
      return PGDF_ERR_IO;
    }
    try {
      req = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      std::fprintf(stderr, "progdf render: %s: %s\n", a.request.c_str(), e.what());
      return PGDF_ERR_FORMAT;
    }
  }
  if (a.azimuth) req["camera"]["azimuth"] = *a.azimuth;
  if (a.elevation) req["camera"]["elevation"] = *a.elevation;
  if (a.width) req["camera"]["width"] = *a.width;
  if (a.height) req["camera"]["height"] = *a.height;
  for (const auto& c : a.controls) {
    const auto eq = c.rfind('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "progdf render: control '%s' is not id=u\n", c.c_str());
      return PGDF_ERR_INVALID_ARGUMENT;
    }
    try {
      req["controls"][c.substr(0, eq)] = std::stod(c.substr(eq + 1));
    } catch (const std::exception&) {
      std::fprintf(stderr, "progdf render: bad value in '%s'\n", c.c_str());
      return PGDF_ERR_INVALID_ARGUMENT;
    }
  }

  pgdf_session* s = nullptr;
  if (pgdf_status st = pgdf_session_open(a.session.c_str(), &s); st != PGDF_OK) return report(st, "render");
  pgdf_bytes png{nullptr, 0};
  pgdf_render_timing t{};
  const std::string body = req.dump();
  int rc = report(pgdf_session_render(s, body.c_str(), &png, &t), "render");
  if (rc == 0) {
    rc = write_file(a.out, png);
    if (rc == 0) std::printf("%s  compose %.2f ms  render %.2f ms\n", a.out.c_str(), t.compose_ms, t.render_ms);
  }
  pgdf_bytes_free(&png);
  pgdf_session_free(s);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"progdf - controllable Gaussian splat editing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pgdf_version()));

  PipelineArgs pa;
  auto* pipeline = app.add_subcommand("pipeline", "Edit, progressive training and distillation into a session");
  pipeline->add_option("--scene", pa.scene, "Scene JSON")->required();
  pipeline->add_option("--edit", pa.edit, "Edit spec JSON")->required();
  pipeline->add_option("--out", pa.out, "Session directory")->required();
  pipeline->add_option("--config", pa.config, "Pipeline config JSON");
  pipeline->add_option("--seed", pa.seed, "Override the config seed");
  pipeline->add_flag("-q,--quiet", pa.quiet, "No progress output");

  std::string eval_session, eval_out;
  auto* eval = app.add_subcommand("eval", "Per-u evaluation report as CSV");
  eval->add_option("--session", eval_session, "Session directory")->required();
  eval->add_option("--out", eval_out, "CSV output")->required();

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "HTTP/WebSocket render service");
  serve->add_option("--session", sa.session, "Session directory")->required();
  serve->add_option("--port", sa.port, "Port (0 = any free)")->capture_default_str();
  serve->add_option("--address", sa.address, "Bind address")->capture_default_str();
  serve->add_option("--threads", sa.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1, 64));
  serve->add_flag("-q,--quiet", sa.quiet, "No request log");

  std::string sc_out;
  std::uint64_t sc_seed = 0;
  int sc_per_blob = 100, sc_steps = 600;
  auto* scenario = app.add_subcommand("scenario", "Write the two-blob recolor scenario (scene, edit, config)");
  scenario->add_option("--out", sc_out, "Output directory")->required();
  scenario->add_option("--seed", sc_seed, "Seed")->capture_default_str();
  scenario->add_option("--per-blob", sc_per_blob, "Gaussians per blob")->capture_default_str()->check(CLI::PositiveNumber);
  scenario->add_option("--steps", sc_steps, "Progressive training steps")->capture_default_str()->check(CLI::PositiveNumber);

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render one frame from a session to PNG");
  render->add_option("--session", ra.session, "Session directory")->required();
  render->add_option("--out", ra.out, "PNG output")->required();
  render->add_option("--request", ra.request, "RenderRequest JSON file");
  render->add_option("-c,--control", ra.controls, "Slider as id=u (repeatable)");
  render->add_option("--azimuth", ra.azimuth, "Orbit azimuth (deg)");
  render->add_option("--elevation", ra.elevation, "Orbit elevation (deg)");
  render->add_option("--width", ra.width, "Image width");
  render->add_option("--height", ra.height, "Image height");

  CLI11_PARSE(app, argc, argv);

  if (*pipeline) return run_pipeline(pa);
  if (*eval) return report(pgdf_eval(eval_session.c_str(), eval_out.c_str()), "eval");
  if (*serve) return run_serve(sa);
  if (*scenario) return report(pgdf_scenario_write(sc_seed, sc_per_blob, sc_steps, sc_out.c_str()), "scenario");
  if (*render) return run_render(ra);
  return 1;
}
