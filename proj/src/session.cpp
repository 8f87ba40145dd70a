#include "progdf/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "progdf/error.hpp"
#include "progdf/image_io.hpp"
#include "progdf/losses.hpp"
#include "progdf/region_mask.hpp"
#include "progdf/renderer.hpp"
#include "progdf/scene_io.hpp"

namespace progdf {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kInternal, name + ": " + e.what());
  }
}

void say(const PipelineLog& log, const std::string& msg) {
  if (log) log(msg);
}

// Bank entries a live run will see: snapshot steps kept by build_memory_bank.
std::size_t expected_bank_size(const PgsConfig& pgs, int bank_interval) {
  const std::vector<int> steps = snapshot_steps(pgs.steps, pgs.snapshot_interval);
  std::size_t n = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i == 0 || i + 1 == steps.size() || steps[i] % bank_interval == 0) ++n;
  }
  return n;
}

json timings_json(const StageTimings& t) {
  return {{"oracle_ms", t.oracle_ms}, {"mask_ms", t.mask_ms}, {"pgs_ms", t.pgs_ms}, {"gdf_ms", t.gdf_ms}};
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, what + ": malformed JSON: " + e.what());
  }
}

double mean_offset_l1(const GdfModel& model, const std::vector<Vec3>& positions, double u) {
  if (positions.empty()) return 0.0;
  double s = 0.0;
  for (const GaussianOffset& o : model.forward(positions, u)) {
    for (double v : o.values) s += std::abs(v);
  }
  return s / static_cast<double>(positions.size());
}

}  // namespace

PipelineResult run_pipeline(const Scene& scene, const std::vector<EditSpec>& specs,
                            const PipelineConfig& cfg_in, const PipelineLog& log) {
  PipelineConfig cfg = cfg_in;
  cfg.apply_seed();
  stage("config", [&] { cfg.validate(); });
  require(!specs.empty(), "pipeline: no edits given");

  PipelineResult out;
  out.scene = scene;
  out.config = cfg;
  const std::vector<Camera> cams = stage("rig", [&] { return orbit_rig(cfg.rig); });

  for (std::size_t n = 0; n < specs.size(); ++n) {
    EditResult r;
    r.id = "edit-" + std::to_string(n);
    r.spec = specs[n];
    r.label = specs[n].label.empty() ? std::string(edit_kind_name(specs[n].kind)) : specs[n].label;
    const std::string tag = "[" + r.id + "] ";

    auto t0 = Clock::now();
    ViewSet views;
    stage(tag + "edit-oracle", [&] {
      const EditTarget target = build_edit_target(scene, r.spec);
      r.target = target.scene;
      r.region_gt = target.region;
      views = make_view_set(scene, target, cams);
    });
    r.timings.oracle_ms = ms_since(t0);
    say(log, tag + "oracle: " + std::to_string(r.region_gt.count()) + " gaussians edited, " +
                 std::to_string(cams.size()) + " views");

    t0 = Clock::now();
    stage(tag + "region-mask", [&] {
      const UnprojectionAccumulator acc = accumulate_mask_weights(scene, cams, views.masks);
      r.region = threshold_region(acc, cfg.mask.epsilon, cfg.mask.normalization);
      if (r.region.count() == 0) {
        fail(ErrorCode::kNumeric, "recovered region is empty (epsilon " + std::to_string(cfg.mask.epsilon) + ")");
      }
    });
    r.iou = intersection_over_union(r.region, r.region_gt);
    r.timings.mask_ms = ms_since(t0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "mask: %zu gaussians recovered, IoU %.3f", r.region.count(), r.iou);
    say(log, tag + buf);

    if (!cfg.live_gdf) {
      t0 = Clock::now();
      r.trajectory = stage(tag + "pgs", [&] {
        return run_pgs(scene, cams, views.targets, r.region, cfg.pgs, [&](const Snapshot& s) {
          if (s.t > 0) say(log, tag + "pgs: snapshot t=" + std::to_string(s.t));
        });
      });
      r.timings.pgs_ms = ms_since(t0);

      t0 = Clock::now();
      GdfTrainingResult g = stage(tag + "gdf", [&] { return train_gdf(scene, r.trajectory, cams, r.region, cfg.gdf); });
      r.model = std::move(g.model);
      r.gdf_losses = std::move(g.losses);
      r.timings.gdf_ms = ms_since(t0);
    } else {
      // Snapshots stream into the bank as PGS produces them; the GDF gets its
      // share of iterations after each one and the rest at the end.
      const int total = cfg.gdf.iterations;
      const std::size_t expected = expected_bank_size(cfg.pgs, cfg.gdf.bank_interval);
      GdfTrainer trainer(scene, r.region, cams, cfg.gdf, cfg.pgs.steps);
      double gdf_ms = 0.0;
      std::size_t seen = 0;
      int done = 0;
      auto train_until = [&](int target_iters) {
        const auto g0 = Clock::now();
        while (done < target_iters) {
          r.gdf_losses.push_back(trainer.step(total));
          ++done;
        }
        gdf_ms += ms_since(g0);
      };
      t0 = Clock::now();
      r.trajectory = stage(tag + "pgs", [&] {
        return run_pgs(scene, cams, views.targets, r.region, cfg.pgs, [&](const Snapshot& s) {
          const bool keep = seen == 0 || s.t == cfg.pgs.steps || s.t % cfg.gdf.bank_interval == 0;
          if (!keep) return;
          ++seen;
          stage(tag + "gdf", [&] {
            trainer.add_snapshot(s);
            train_until(static_cast<int>(static_cast<long long>(total) * static_cast<long long>(seen) /
                                         static_cast<long long>(expected)));
          });
        });
      });
      stage(tag + "gdf", [&] { train_until(total); });
      r.model = trainer.model();
      r.timings.gdf_ms = gdf_ms;
      r.timings.pgs_ms = ms_since(t0) - gdf_ms;
    }
    if (!r.gdf_losses.empty()) {
      std::snprintf(buf, sizeof buf, "gdf: %zu iterations, final loss %.5f", r.gdf_losses.size(),
                    r.gdf_losses.back().total);
      say(log, tag + buf);
    }
    out.edits.push_back(std::move(r));
  }
  return out;
}

void write_session(const fs::path& dir, const PipelineResult& result) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  const std::string config_text = encode_config(result.config);
  const json config = json::parse(config_text);

  save_scene(dir / "scene.json", result.scene);
  json manifest = {{"version", 1}, {"scene", "scene.json"}, {"gaussians", result.scene.size()},
                   {"config", config}, {"edits", json::array()}};
  json timings = {{"edits", json::array()}};
  for (const EditResult& e : result.edits) {
    const fs::path sub = dir / e.id;
    fs::create_directories(sub, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + sub.string() + ": " + ec.message());
    save_region(sub / "region.json", e.region);
    save_region(sub / "region-gt.json", e.region_gt);
    save_scene(sub / "target.json", e.target);
    save_gdf_model(sub / "model.gdf", e.model);
    write_text_file(sub / "gdf-losses.csv", encode_gdf_losses_csv(e.gdf_losses));
    save_trajectory(sub / "trajectory", e.trajectory, config_text);
    manifest["edits"].push_back({
        {"id", e.id},
        {"label", e.label},
        {"kind", edit_kind_name(e.spec.kind)},
        {"spec", json::parse(encode_edit_spec(e.spec))},
        {"region", e.id + "/region.json"},
        {"region_gt", e.id + "/region-gt.json"},
        {"region_size", e.region.count()},
        {"iou", e.iou},
        {"target", e.id + "/target.json"},
        {"model", e.id + "/model.gdf"},
        {"trajectory", e.id + "/trajectory"},
        {"gdf_losses", e.id + "/gdf-losses.csv"},
        {"horizon", e.trajectory.snapshots.empty() ? 0 : e.trajectory.snapshots.back().t},
    });
    json t = timings_json(e.timings);
    t["id"] = e.id;
    timings["edits"].push_back(t);
  }
  write_text_file(dir / "session.json", manifest.dump(2) + "\n");
  write_text_file(dir / "timings.json", timings.dump(2) + "\n");
}

void cmd_pipeline(const fs::path& scene_path, const fs::path& edit_path, const std::optional<fs::path>& config_path,
                  const fs::path& out_dir, std::optional<std::uint64_t> seed, const PipelineLog& log) {
  const Scene scene = stage("scene", [&] { return load_scene(scene_path); });
  const std::vector<EditSpec> specs = stage("edit spec", [&] {
    return decode_edit_specs(read_text_file(edit_path), edit_path.parent_path());
  });
  PipelineConfig cfg = config_path ? stage("config", [&] { return load_config(*config_path); }) : PipelineConfig{};
  if (seed) cfg.seed = *seed;
  cfg.apply_seed();
  const PipelineResult result = run_pipeline(scene, specs, cfg, log);
  stage("write", [&] { write_session(out_dir, result); });
}

// ---------------------------------------------------------------------------

Session Session::load(const fs::path& dir) {
  Session s;
  s.dir_ = dir;
  const fs::path manifest_path = dir / "session.json";
  if (!fs::exists(manifest_path)) fail(ErrorCode::kNotFound, "no session manifest at " + manifest_path.string());
  const json m = parse_json(read_text_file(manifest_path), "session manifest");
  try {
    if (m.at("version").get<int>() != 1) fail(ErrorCode::kFormat, "session manifest: unsupported version");
    s.scene_ = load_scene(dir / m.at("scene").get<std::string>());
    s.config_ = decode_config(m.at("config").dump());

    json timings;
    if (fs::exists(dir / "timings.json")) timings = parse_json(read_text_file(dir / "timings.json"), "timings");

    for (const json& e : m.at("edits")) {
      SessionEdit se;
      se.id = e.at("id").get<std::string>();
      se.label = e.at("label").get<std::string>();
      se.kind = e.at("kind").get<std::string>();
      se.region = load_region(dir / e.at("region").get<std::string>());
      se.region_gt = load_region(dir / e.at("region_gt").get<std::string>());
      se.model = load_gdf_model(dir / e.at("model").get<std::string>());
      se.target = load_scene(dir / e.at("target").get<std::string>());
      se.trajectory_dir = dir / e.at("trajectory").get<std::string>();
      se.horizon = e.at("horizon").get<int>();
      se.iou = e.at("iou").get<double>();
      if (se.region.size() != s.scene_.size() || se.region_gt.size() != s.scene_.size() ||
          se.target.size() != s.scene_.size()) {
        fail(ErrorCode::kFormat, "session: " + se.id + " does not match the scene's Gaussian count");
      }
      if (!fs::exists(se.trajectory_dir / "manifest.json")) {
        fail(ErrorCode::kNotFound, "session: missing trajectory for " + se.id);
      }
      if (timings.is_object() && timings.contains("edits")) {
        for (const json& t : timings["edits"]) {
          if (t.value("id", "") != se.id) continue;
          se.timings = StageTimings{t.at("oracle_ms").get<double>(), t.at("mask_ms").get<double>(),
                                    t.at("pgs_ms").get<double>(), t.at("gdf_ms").get<double>()};
        }
      }
      s.edits_.push_back(std::move(se));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("session manifest: ") + e.what());
  }
  return s;
}

std::size_t Session::find_edit(std::string_view id) const {
  for (std::size_t i = 0; i < edits_.size(); ++i) {
    if (edits_[i].id == id) return i;
  }
  for (std::size_t i = 0; i < edits_.size(); ++i) {
    if (edits_[i].label == id) return i;
  }
  fail(ErrorCode::kNotFound, "unknown edit '" + std::string(id) + "'");
}

Camera Session::default_camera() const {
  const RigConfig& r = config_.rig;
  return Camera::orbit(30.0, 20.0, r.radius, r.fov_deg, r.width, r.height, r.target);
}

std::string Session::meta_json() const {
  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
  if (!scene_.gaussians.empty()) {
    lo = hi = scene_.gaussians.front().position;
    for (const auto& g : scene_.gaussians) {
      lo = lo.cwiseMin(g.position);
      hi = hi.cwiseMax(g.position);
    }
  }
  const RigConfig& r = config_.rig;
  json meta = {
      {"version", 1},
      {"scene",
       {{"gaussians", scene_.size()},
        {"bounds", {{"min", {lo.x(), lo.y(), lo.z()}}, {"max", {hi.x(), hi.y(), hi.z()}}}},
        {"background", {scene_.background.x(), scene_.background.y(), scene_.background.z()}}}},
      {"edits", json::array()},
      {"camera",
       {{"azimuth", 30.0},
        {"elevation", 20.0},
        {"radius", r.radius},
        {"fov", r.fov_deg},
        {"width", r.width},
        {"height", r.height},
        {"target", {r.target.x(), r.target.y(), r.target.z()}}}},
      {"bins", edits_.empty() ? config_.gdf.bins : edits_.front().model.config().bins},
  };
  for (const SessionEdit& e : edits_) {
    meta["edits"].push_back({{"id", e.id},
                             {"label", e.label},
                             {"kind", e.kind},
                             {"region_size", e.region.count()},
                             {"horizon", e.horizon},
                             {"bins", e.model.config().bins}});
  }
  return meta.dump();
}

namespace {

double number_field(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(ErrorCode::kFormat, std::string("render request: '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(ErrorCode::kFormat, std::string("render request: '") + key + "' is not finite");
  return d;
}

int dim_field(const json& obj, const char* key, int fallback) {
  const double d = number_field(obj, key, fallback);
  if (d < 1 || d > 2048 || d != std::floor(d)) {
    fail(ErrorCode::kFormat, std::string("render request: '") + key + "' must be an integer in [1, 2048]");
  }
  return static_cast<int>(d);
}

std::vector<double> number_array(const json& obj, const char* key, std::size_t n) {
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != n) {
    fail(ErrorCode::kFormat, std::string("render request: '") + key + "' must hold " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) fail(ErrorCode::kFormat, std::string("render request: '") + key + "' must be numeric");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

RenderRequest Session::parse_request(std::string_view text) const {
  const json doc = parse_json(text, "render request");
  if (!doc.is_object()) fail(ErrorCode::kFormat, "render request: expected an object");
  for (const auto& [k, v] : doc.items()) {
    if (k != "camera" && k != "controls") fail(ErrorCode::kFormat, "render request: unknown key '" + k + "'");
  }
  RenderRequest req;
  const RigConfig& r = config_.rig;
  const json cam = doc.value("camera", json::object());
  if (!cam.is_object()) fail(ErrorCode::kFormat, "render request: 'camera' must be an object");
  if (cam.contains("fx") || cam.contains("rotation")) {
    Camera c;
    c.width = dim_field(cam, "width", r.width);
    c.height = dim_field(cam, "height", r.height);
    c.fx = number_field(cam, "fx", 0.0);
    c.fy = number_field(cam, "fy", 0.0);
    c.cx = number_field(cam, "cx", 0.5 * c.width);
    c.cy = number_field(cam, "cy", 0.5 * c.height);
    if (!cam.contains("rotation") || !cam.contains("translation")) {
      fail(ErrorCode::kFormat, "render request: full camera needs 'rotation' and 'translation'");
    }
    const auto rot = number_array(cam, "rotation", 9);
    const auto tr = number_array(cam, "translation", 3);
    for (int i = 0; i < 9; ++i) c.rotation(i / 3, i % 3) = rot[static_cast<std::size_t>(i)];
    c.translation = Vec3(tr[0], tr[1], tr[2]);
    if (!c.is_valid()) fail(ErrorCode::kFormat, "render request: invalid camera");
    req.camera = c;
  } else {
    for (const auto& [k, v] : cam.items()) {
      static const char* known[] = {"azimuth", "elevation", "radius", "fov", "width", "height", "target"};
      if (std::find_if(std::begin(known), std::end(known), [&](const char* s) { return k == s; }) == std::end(known)) {
        fail(ErrorCode::kFormat, "render request: unknown camera key '" + k + "'");
      }
    }
    Vec3 target = r.target;
    if (cam.contains("target")) {
      const auto t = number_array(cam, "target", 3);
      target = Vec3(t[0], t[1], t[2]);
    }
    const double radius = number_field(cam, "radius", r.radius);
    const double fov = number_field(cam, "fov", r.fov_deg);
    if (radius <= 0.0 || fov <= 0.0 || fov >= 180.0) {
      fail(ErrorCode::kFormat, "render request: radius must be > 0 and fov in (0, 180)");
    }
    req.camera = Camera::orbit(number_field(cam, "azimuth", 30.0), number_field(cam, "elevation", 20.0), radius, fov,
                               dim_field(cam, "width", r.width), dim_field(cam, "height", r.height), target);
  }

  if (doc.contains("controls")) {
    const json& ctl = doc["controls"];
    auto add = [&](const std::string& id, const json& u) {
      if (!u.is_number()) fail(ErrorCode::kFormat, "render request: control value for '" + id + "' must be a number");
      double v = u.get<double>();
      if (std::isnan(v)) fail(ErrorCode::kFormat, "render request: control value is NaN");
      req.controls.emplace_back(find_edit(id), std::clamp(v, 0.0, 1.0));
    };
    if (ctl.is_object()) {
      for (const auto& [k, v] : ctl.items()) add(k, v);
    } else if (ctl.is_array()) {
      for (const json& c : ctl) {
        if (!c.is_object() || !c.contains("edit") || !c.contains("u")) {
          fail(ErrorCode::kFormat, "render request: controls must be {\"edit\", \"u\"} objects");
        }
        const json& id = c["edit"];
        if (id.is_string()) {
          add(id.get<std::string>(), c["u"]);
        } else if (id.is_number_unsigned()) {
          add("edit-" + std::to_string(id.get<std::size_t>()), c["u"]);
        } else {
          fail(ErrorCode::kFormat, "render request: edit id must be a string or index");
        }
      }
    } else {
      fail(ErrorCode::kFormat, "render request: 'controls' must be a list or an object");
    }
  }
  return req;
}

Scene Session::compose(const std::vector<std::pair<std::size_t, double>>& controls) const {
  std::vector<RegionControl> active;
  for (const auto& [idx, u] : controls) {
    require(idx < edits_.size(), "compose: edit index out of range");
    if (u == 0.0) continue;
    active.push_back({&edits_[idx].model, &edits_[idx].region, u});
  }
  if (active.empty()) return scene_;
  return compose_regions(scene_, active);
}

RenderResult Session::render(const RenderRequest& req) const {
  RenderResult out;
  auto t0 = Clock::now();
  const Scene scene = compose(req.controls);
  out.compose_ms = ms_since(t0);
  t0 = Clock::now();
  out.image = progdf::render(scene, req.camera);
  out.render_ms = ms_since(t0);
  out.png = encode_png(out.image);
  return out;
}

// ---------------------------------------------------------------------------

double spearman(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "spearman: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j);
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

RigConfig heldout_rig(const RigConfig& rig) {
  RigConfig h = rig;
  h.azimuth_offset += 180.0 / std::max(1, rig.azimuth_steps);
  return h;
}

std::vector<EvalRow> evaluate_session(const Session& session, int u_steps) {
  require(u_steps >= 1, "eval: u_steps must be >= 1");
  const std::vector<Camera> cams = orbit_rig(heldout_rig(session.config().rig));
  const std::vector<ImageBuffer> originals = render_views(session.scene(), cams);
  std::vector<EvalRow> rows;
  for (std::size_t e = 0; e < session.edits().size(); ++e) {
    const SessionEdit& ed = session.edits()[e];
    const Trajectory traj = stage(ed.id + " trajectory", [&] { return load_trajectory(ed.trajectory_dir); });
    const std::vector<ImageBuffer> targets = render_views(ed.target, cams);
    const std::vector<ImageBuffer> finals = render_views(traj.snapshots.back().scene, cams);
    double residual = 0.0;
    for (std::size_t v = 0; v < cams.size(); ++v) residual += mean_abs_difference(finals[v], targets[v]);
    residual /= static_cast<double>(cams.size());

    std::vector<Vec3> positions;
    for (std::size_t i : ed.region.indices()) positions.push_back(session.scene().gaussians[i].position);

    const std::size_t first = rows.size();
    std::vector<double> us, norms;
    for (int k = 0; k <= u_steps; ++k) {
      EvalRow row;
      row.edit = ed.id;
      row.label = ed.label;
      row.u = static_cast<double>(k) / u_steps;
      row.iou = ed.iou;
      row.pgs_residual = residual;
      row.timings = ed.timings;
      const auto t0 = Clock::now();
      const Scene pred = predict_scene(session.scene(), ed.model, ed.region, row.u);
      row.compose_ms = ms_since(t0);
      for (std::size_t v = 0; v < cams.size(); ++v) {
        const ImageBuffer img = render(pred, cams[v]);
        row.l1_vs_original += mean_abs_difference(img, originals[v]);
        row.l1_vs_target += mean_abs_difference(img, targets[v]);
        row.l1_vs_final += mean_abs_difference(img, finals[v]);
        row.sharpness += laplacian_response(img);
      }
      const double nv = static_cast<double>(cams.size());
      row.l1_vs_original /= nv;
      row.l1_vs_target /= nv;
      row.l1_vs_final /= nv;
      row.sharpness /= nv;
      row.offset_l1 = mean_offset_l1(ed.model, positions, row.u);
      us.push_back(row.u);
      norms.push_back(row.offset_l1);
      rows.push_back(row);
    }
    const double rho = spearman(us, norms);
    for (std::size_t i = first; i < rows.size(); ++i) rows[i].spearman = rho;
  }
  return rows;
}

std::string encode_eval_csv(const std::vector<EvalRow>& rows) {
  std::string out =
      "edit,label,u,l1_vs_original,l1_vs_target,l1_vs_final,offset_l1,sharpness,spearman,iou,pgs_residual,"
      "compose_ms,oracle_ms,mask_ms,pgs_ms,gdf_ms\n";
  char buf[512];
  for (const EvalRow& r : rows) {
    std::string label = r.label;
    if (label.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : label) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
      label = q + "\"";
    }
    std::snprintf(buf, sizeof buf, "%s,%s,%.2f,%.8g,%.8g,%.8g,%.8g,%.8g,%.6f,%.6f,%.8g,%.4f,", r.edit.c_str(),
                  label.c_str(), r.u, r.l1_vs_original, r.l1_vs_target, r.l1_vs_final, r.offset_l1, r.sharpness,
                  r.spearman, r.iou, r.pgs_residual, r.compose_ms);
    out += buf;
    if (r.timings) {
      std::snprintf(buf, sizeof buf, "%.1f,%.1f,%.1f,%.1f\n", r.timings->oracle_ms, r.timings->mask_ms,
                    r.timings->pgs_ms, r.timings->gdf_ms);
      out += buf;
    } else {
      out += ",,,\n";
    }
  }
  return out;
}

void cmd_eval(const fs::path& session_dir, const fs::path& out_csv) {
  const Session session = stage("load session", [&] { return Session::load(session_dir); });
  const auto rows = stage("eval", [&] { return evaluate_session(session); });
  stage("write", [&] { write_text_file(out_csv, encode_eval_csv(rows)); });
}

}  // namespace progdf
