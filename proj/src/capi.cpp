#include "progdf.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include <json.hpp>

#include "progdf/config.hpp"
#include "progdf/error.hpp"
#include "progdf/gdf.hpp"
#include "progdf/image_io.hpp"
#include "progdf/renderer.hpp"
#include "progdf/scenario.hpp"
#include "progdf/scene_io.hpp"
#include "progdf/session.hpp"

struct pgdf_scene {
  progdf::Scene scene;
};
struct pgdf_model {
  progdf::GdfModel model;
};
struct pgdf_session {
  progdf::Session session;
};

namespace {

thread_local std::string g_last_error;

pgdf_status to_status(progdf::ErrorCode c) { return static_cast<pgdf_status>(static_cast<int>(c)); }

template <typename F>
pgdf_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PGDF_OK;
  } catch (const progdf::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PGDF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PGDF_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) progdf::fail(progdf::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

void give_bytes(const std::vector<std::uint8_t>& src, pgdf_bytes* out) {
  out->data = static_cast<uint8_t*>(std::malloc(src.empty() ? 1 : src.size()));
  if (!out->data) throw std::bad_alloc();
  if (!src.empty()) std::memcpy(out->data, src.data(), src.size());
  out->size = src.size();
}

char* give_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

progdf::Camera orbit_camera(const pgdf_orbit& o) {
  progdf::require(o.width >= 1 && o.height >= 1 && o.width <= 4096 && o.height <= 4096,
                  "camera: width and height must be in [1, 4096]");
  progdf::require(o.radius > 0.0 && o.fov > 0.0 && o.fov < 180.0, "camera: radius must be > 0, fov in (0, 180)");
  return progdf::Camera::orbit(o.azimuth, o.elevation, o.radius, o.fov, o.width, o.height,
                               progdf::Vec3(o.target[0], o.target[1], o.target[2]));
}

}  // namespace

extern "C" {

const char* pgdf_version(void) { return "1.0.0"; }

const char* pgdf_last_error(void) { return g_last_error.c_str(); }

const char* pgdf_status_name(pgdf_status s) {
  switch (s) {
    case PGDF_OK: return "ok";
    case PGDF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PGDF_ERR_IO: return "i/o error";
    case PGDF_ERR_FORMAT: return "format error";
    case PGDF_ERR_NOT_FOUND: return "not found";
    case PGDF_ERR_NUMERIC: return "numeric error";
    case PGDF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void pgdf_string_free(char* s) { std::free(s); }

void pgdf_bytes_free(pgdf_bytes* b) {
  if (!b) return;
  std::free(b->data);
  b->data = nullptr;
  b->size = 0;
}

pgdf_status pgdf_scene_load(const char* path, pgdf_scene** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new pgdf_scene{progdf::load_scene(path)};
  });
}

pgdf_status pgdf_scene_parse(const char* text, pgdf_scene** out) {
  return guarded([&] {
    need(text, "json_text");
    need(out, "out");
    *out = new pgdf_scene{progdf::decode_scene(text)};
  });
}

pgdf_status pgdf_scene_save(const pgdf_scene* scene, const char* path) {
  return guarded([&] {
    need(scene, "scene");
    need(path, "path");
    progdf::save_scene(path, scene->scene);
  });
}

size_t pgdf_scene_count(const pgdf_scene* scene) { return scene ? scene->scene.size() : 0; }

void pgdf_scene_free(pgdf_scene* scene) { delete scene; }

pgdf_status pgdf_scene_render_png(const pgdf_scene* scene, const pgdf_orbit* camera, pgdf_bytes* png) {
  return guarded([&] {
    need(scene, "scene");
    need(camera, "camera");
    need(png, "png");
    give_bytes(progdf::encode_png(progdf::render(scene->scene, orbit_camera(*camera))), png);
  });
}

pgdf_status pgdf_model_load(const char* path, pgdf_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new pgdf_model{progdf::load_gdf_model(path)};
  });
}

void pgdf_model_free(pgdf_model* model) { delete model; }

int pgdf_model_bins(const pgdf_model* model) { return model ? model->model.config().bins : 0; }

pgdf_status pgdf_model_forward(const pgdf_model* model, const double* positions, size_t count, double u,
                               double* offsets) {
  return guarded([&] {
    need(model, "model");
    if (count == 0) return;
    need(positions, "positions");
    need(offsets, "offsets");
    std::vector<progdf::Vec3> pos(count);
    for (size_t i = 0; i < count; ++i) pos[i] = progdf::Vec3(positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]);
    const auto out = model->model.forward(pos, u);
    for (size_t i = 0; i < count; ++i) {
      for (int k = 0; k < progdf::raw::kDim; ++k) offsets[i * progdf::raw::kDim + k] = out[i][k];
    }
  });
}

pgdf_status pgdf_predict_scene(const pgdf_scene* original, const pgdf_model* model, const uint8_t* mask,
                               size_t mask_len, double u, pgdf_scene** out) {
  return guarded([&] {
    need(original, "original");
    need(model, "model");
    need(out, "out");
    if (mask_len > 0) need(mask, "mask");
    progdf::RegionMask m(mask_len);
    for (size_t i = 0; i < mask_len; ++i) m.set(i, mask[i] != 0);
    *out = new pgdf_scene{progdf::predict_scene(original->scene, model->model, m, u)};
  });
}

pgdf_status pgdf_pipeline(const pgdf_pipeline_options* o) {
  return guarded([&] {
    need(o, "options");
    need(o->scene_path, "scene_path");
    need(o->edit_path, "edit_path");
    need(o->out_dir, "out_dir");
    std::optional<std::filesystem::path> config;
    if (o->config_path) config = o->config_path;
    std::optional<std::uint64_t> seed;
    if (o->override_seed) seed = o->seed;
    progdf::PipelineLog log;
    if (o->log) {
      log = [fn = o->log, user = o->log_user](const std::string& msg) { fn(msg.c_str(), user); };
    }
    progdf::cmd_pipeline(o->scene_path, o->edit_path, config, o->out_dir, seed, log);
  });
}

pgdf_status pgdf_eval(const char* session_dir, const char* out_csv) {
  return guarded([&] {
    need(session_dir, "session_dir");
    need(out_csv, "out_csv");
    progdf::cmd_eval(session_dir, out_csv);
  });
}

pgdf_status pgdf_scenario_write(uint64_t seed, int gaussians_per_blob, int steps, const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    progdf::require(gaussians_per_blob >= 1, "scenario: gaussians_per_blob must be >= 1");
    progdf::require(steps >= 1, "scenario: steps must be >= 1");
    const progdf::StandardScenario sc = progdf::standard_scenario(seed, gaussians_per_blob);
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) progdf::fail(progdf::ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
    progdf::save_scene(dir / "scene.json", sc.scene);
    progdf::write_text_file(dir / "edit.json", progdf::encode_edit_spec(sc.edit) + "\n");
    progdf::PipelineConfig cfg;
    cfg.seed = seed;
    cfg.rig = sc.rig;
    cfg.pgs.steps = steps;
    cfg.apply_seed();
    progdf::write_text_file(dir / "config.json", progdf::encode_config(cfg) + "\n");
  });
}

pgdf_status pgdf_session_open(const char* dir, pgdf_session** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new pgdf_session{progdf::Session::load(dir)};
  });
}

void pgdf_session_free(pgdf_session* session) { delete session; }

size_t pgdf_session_edit_count(const pgdf_session* session) {
  return session ? session->session.edits().size() : 0;
}

pgdf_status pgdf_session_meta(const pgdf_session* session, char** json_out) {
  return guarded([&] {
    need(session, "session");
    need(json_out, "json_out");
    *json_out = give_string(session->session.meta_json());
  });
}

pgdf_status pgdf_session_render(const pgdf_session* session, const char* request_json, pgdf_bytes* png,
                                pgdf_render_timing* timing) {
  return guarded([&] {
    need(session, "session");
    need(request_json, "request_json");
    need(png, "png");
    const progdf::RenderRequest req = session->session.parse_request(request_json);
    const progdf::RenderResult res = session->session.render(req);
    give_bytes(res.png, png);
    if (timing) {
      timing->compose_ms = res.compose_ms;
      timing->render_ms = res.render_ms;
    }
  });
}

}  // extern "C"
