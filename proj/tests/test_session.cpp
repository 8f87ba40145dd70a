#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <thread>

#include <json.hpp>

#include "progdf/error.hpp"
#include "progdf/image_io.hpp"
#include "progdf/losses.hpp"
#include "progdf/renderer.hpp"
#include "progdf/scenario.hpp"
#include "progdf/scene_io.hpp"
#include "progdf/session.hpp"

using namespace progdf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() /
                     ("progdf-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PipelineConfig small_config(const RigConfig& rig, std::uint64_t seed = 3) {
  PipelineConfig cfg;
  cfg.seed = seed;
  cfg.rig = rig;
  cfg.pgs.steps = 60;
  cfg.pgs.snapshot_interval = 20;
  cfg.gdf.iterations = 150;
  cfg.apply_seed();
  return cfg;
}

struct Fixture {
  StandardScenario sc = standard_scenario(5, 30);
  PipelineConfig cfg = small_config(sc.rig);
};

// One pipeline run shared by the read-only session tests.
const fs::path& shared_session() {
  static const fs::path dir = [] {
    Fixture f;
    const fs::path d = scratch_dir("shared");
    write_session(d, run_pipeline(f.sc.scene, {f.sc.edit}, f.cfg));
    return d;
  }();
  return dir;
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

}  // namespace

TEST_CASE("spearman with ties and direction") {
  const std::vector<double> a{0, 1, 2, 3, 4};
  CHECK(spearman(a, std::vector<double>{1, 2, 3, 4, 10}) == doctest::Approx(1.0));
  CHECK(spearman(a, std::vector<double>{9, 7, 5, 3, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(a, std::vector<double>{1, 1, 1, 1, 1}) == 0.0);
  // ties get average ranks: ranks of b are 0.5, 0.5, 2, 3, 4
  CHECK(spearman(a, std::vector<double>{0, 0, 1, 2, 3}) == doctest::Approx(0.9746794).epsilon(1e-6));
  CHECK(code_of([&] { spearman(a, std::vector<double>{1}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("held-out rig is shifted by half a step") {
  RigConfig r;
  r.azimuth_steps = 8;
  r.azimuth_offset = 5.0;
  const RigConfig h = heldout_rig(r);
  CHECK(h.azimuth_offset == doctest::Approx(27.5));
  CHECK(h.elevations == r.elevations);
}

TEST_CASE("identity edit: GDF at u=1 reproduces the original") {
  Fixture f;
  EditSpec id;
  id.kind = EditKind::kUniformScale;
  id.factor = 1.0;
  id.range_begin = 0;
  id.range_end = 30;
  id.label = "identity";
  const PipelineResult res = run_pipeline(f.sc.scene, {id}, f.cfg);
  REQUIRE(res.edits.size() == 1);
  const EditResult& e = res.edits[0];
  for (const Camera& cam : orbit_rig(f.cfg.rig)) {
    const ImageBuffer orig = render(f.sc.scene, cam);
    const ImageBuffer u1 = render(predict_scene(f.sc.scene, e.model, e.region, 1.0), cam);
    CHECK(mean_abs_difference(u1, orig) <= 0.02);
  }
}

TEST_CASE("pipeline artifacts and manifest") {
  const fs::path& dir = shared_session();
  for (const char* p : {"session.json", "timings.json", "scene.json", "edit-0/region.json", "edit-0/region-gt.json",
                        "edit-0/target.json", "edit-0/model.gdf", "edit-0/gdf-losses.csv",
                        "edit-0/trajectory/manifest.json"}) {
    CHECK_MESSAGE(fs::exists(dir / p), p);
  }
  const json m = json::parse(slurp(dir / "session.json"));
  CHECK(m["gaussians"] == 60);
  REQUIRE(m["edits"].size() == 1);
  CHECK(m["edits"][0]["id"] == "edit-0");
  CHECK(m["edits"][0]["label"] == "recolor left blob green");
  // nothing machine- or run-dependent in the manifest
  const std::string text = slurp(dir / "session.json");
  CHECK(text.find("_ms") == std::string::npos);
  CHECK(text.find(dir.string()) == std::string::npos);
}

TEST_CASE("pipeline is reproducible") {
  Fixture f;
  const fs::path a = scratch_dir("repro-a"), b = scratch_dir("repro-b");
  write_session(a, run_pipeline(f.sc.scene, {f.sc.edit}, f.cfg));
  write_session(b, run_pipeline(f.sc.scene, {f.sc.edit}, f.cfg));
  CHECK(slurp(a / "session.json") == slurp(b / "session.json"));
  CHECK(read_binary_file(a / "edit-0/model.gdf") == read_binary_file(b / "edit-0/model.gdf"));
  CHECK(slurp(a / "edit-0/region.json") == slurp(b / "edit-0/region.json"));
  CHECK(slurp(a / "edit-0/trajectory/manifest.json") == slurp(b / "edit-0/trajectory/manifest.json"));
}

TEST_CASE("stage-tagged failures") {
  Fixture f;
  EditSpec bad = f.sc.edit;
  bad.range_begin = 0;
  bad.range_end = 1000;  // past N
  try {
    run_pipeline(f.sc.scene, {bad}, f.cfg);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("[edit-0] edit-oracle") != std::string::npos);
  }
  CHECK(code_of([&] { run_pipeline(f.sc.scene, {}, f.cfg); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("cmd_pipeline: missing scene names the path") {
  const fs::path d = scratch_dir("missing");
  try {
    cmd_pipeline(d / "nope.json", d / "edit.json", std::nullopt, d / "out", std::nullopt);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(std::string(e.what()).find("nope.json") != std::string::npos);
  }
}

TEST_CASE("cmd_pipeline honours config and seed override") {
  Fixture f;
  const fs::path d = scratch_dir("cmd");
  save_scene(d / "scene.json", f.sc.scene);
  write_text_file(d / "edit.json", encode_edit_spec(f.sc.edit));
  write_text_file(d / "config.json", encode_config(f.cfg));
  cmd_pipeline(d / "scene.json", d / "edit.json", d / "config.json", d / "s1", std::nullopt);
  cmd_pipeline(d / "scene.json", d / "edit.json", d / "config.json", d / "s2", 99);
  const json m1 = json::parse(slurp(d / "s1/session.json"));
  const json m2 = json::parse(slurp(d / "s2/session.json"));
  CHECK(m1["config"]["seed"] == 3);
  CHECK(m1["config"]["pgs"]["steps"] == 60);
  CHECK(m2["config"]["seed"] == 99);
}

TEST_CASE("session meta") {
  const Session s = Session::load(shared_session());
  const json meta = json::parse(s.meta_json());
  CHECK(meta["scene"]["gaussians"] == s.scene().size());
  REQUIRE(meta["edits"].size() == 1);
  CHECK(meta["edits"][0]["region_size"] == s.edits()[0].region.count());
  CHECK(meta["edits"][0]["id"] == "edit-0");
  CHECK(meta["bins"] == s.edits()[0].model.config().bins);
  CHECK(meta["camera"]["width"] == s.config().rig.width);
  const auto& lo = meta["scene"]["bounds"]["min"];
  const auto& hi = meta["scene"]["bounds"]["max"];
  for (const auto& g : s.scene().gaussians) {
    for (int k = 0; k < 3; ++k) {
      CHECK(g.position[k] >= lo[k].get<double>());
      CHECK(g.position[k] <= hi[k].get<double>());
    }
  }
}

TEST_CASE("render: u=0 is byte-identical to the original") {
  const Session s = Session::load(shared_session());
  const RenderRequest req = s.parse_request(R"({"camera": {"azimuth": 40, "elevation": 10}, "controls": {"edit-0": 0}})");
  const RenderResult r = s.render(req);
  CHECK(r.png == encode_png(render(s.scene(), req.camera)));
  const RenderRequest none = s.parse_request(R"({"camera": {"azimuth": 40, "elevation": 10}})");
  CHECK(s.render(none).png == r.png);
}

TEST_CASE("render: purity and clamping") {
  const Session s = Session::load(shared_session());
  const RenderRequest a = s.parse_request(R"({"controls": [{"edit": "edit-0", "u": 0.7}]})");
  CHECK(s.render(a).png == s.render(a).png);
  const RenderRequest hi = s.parse_request(R"({"controls": {"edit-0": 7}})");
  const RenderRequest one = s.parse_request(R"({"controls": {"edit-0": 1}})");
  CHECK(hi.controls[0].second == 1.0);
  CHECK(s.render(hi).png == s.render(one).png);
  const RenderRequest lo = s.parse_request(R"({"controls": {"edit-0": -3}})");
  CHECK(lo.controls[0].second == 0.0);
  // label works as id
  const RenderRequest by_label = s.parse_request(R"({"controls": {"recolor left blob green": 0.7}})");
  CHECK(s.render(by_label).png == s.render(a).png);
  // u = 1 actually changes the frame
  CHECK(s.render(one).png != s.render(s.parse_request("{}")).png);
}

TEST_CASE("render: concurrent requests match serial ones") {
  const Session s = Session::load(shared_session());
  std::vector<std::string> bodies;
  for (int i = 0; i < 8; ++i) {
    bodies.push_back(json{{"camera", {{"azimuth", 15.0 * i}}}, {"controls", {{"edit-0", 0.125 * i}}}}.dump());
  }
  std::vector<std::vector<std::uint8_t>> serial, parallel(bodies.size());
  for (const auto& b : bodies) serial.push_back(s.render(s.parse_request(b)).png);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    threads.emplace_back([&, i] { parallel[i] = s.render(s.parse_request(bodies[i])).png; });
  }
  for (auto& t : threads) t.join();
  CHECK(serial == parallel);
}

TEST_CASE("render request errors") {
  const Session s = Session::load(shared_session());
  auto code = [&](const char* body) { return code_of([&] { s.parse_request(body); }); };
  CHECK(code(R"({"controls": {"edit-7": 0.5}})") == ErrorCode::kNotFound);
  CHECK(code(R"({"controls": [{"edit": "nope", "u": 1}]})") == ErrorCode::kNotFound);
  CHECK(code("{") == ErrorCode::kFormat);
  CHECK(code("[]") == ErrorCode::kFormat);
  CHECK(code(R"({"cam": {}})") == ErrorCode::kFormat);
  CHECK(code(R"({"camera": {"width": 0}})") == ErrorCode::kFormat);
  CHECK(code(R"({"camera": {"width": 2.5}})") == ErrorCode::kFormat);
  CHECK(code(R"({"camera": {"azimuth": "north"}})") == ErrorCode::kFormat);
  CHECK(code(R"({"camera": {"zoom": 2}})") == ErrorCode::kFormat);
  CHECK(code(R"({"controls": {"edit-0": "half"}})") == ErrorCode::kFormat);
  CHECK(code(R"({"controls": 3})") == ErrorCode::kFormat);
  CHECK(code(R"({"camera": {"width": 8, "height": 8, "fx": 8, "fy": 8, "cx": 4, "cy": 4}})") == ErrorCode::kFormat);
}

TEST_CASE("render with a full camera") {
  const Session s = Session::load(shared_session());
  const Camera c = Camera::orbit(70, 5, 3.5, 40, 32, 24);
  json cam = {{"width", c.width}, {"height", c.height}, {"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}};
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) cam["rotation"].push_back(c.rotation(r, k));
    cam["translation"].push_back(c.translation[r]);
  }
  const RenderResult r = s.render(s.parse_request(json{{"camera", cam}}.dump()));
  CHECK(r.image.width == 32);
  CHECK(r.image.height == 24);
  CHECK(r.png == encode_png(render(s.scene(), c)));
}

TEST_CASE("session load validation") {
  CHECK(code_of([] { Session::load("/nonexistent/session"); }) == ErrorCode::kNotFound);
  const fs::path d = scratch_dir("broken");
  fs::copy(shared_session(), d, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  fs::remove(d / "edit-0/model.gdf");
  CHECK(code_of([&] { Session::load(d); }) == ErrorCode::kIo);

  const fs::path d2 = scratch_dir("broken2");
  fs::copy(shared_session(), d2, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  fs::remove(d2 / "edit-0/trajectory/manifest.json");
  CHECK(code_of([&] { Session::load(d2); }) == ErrorCode::kNotFound);

  const fs::path d3 = scratch_dir("broken3");
  fs::copy(shared_session(), d3, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  Scene smaller = load_scene(d3 / "scene.json");
  smaller.gaussians.pop_back();
  save_scene(d3 / "scene.json", smaller);
  CHECK(code_of([&] { Session::load(d3); }) == ErrorCode::kFormat);
}

TEST_CASE("eval report") {
  const Session s = Session::load(shared_session());
  const auto rows = evaluate_session(s);
  REQUIRE(rows.size() == 11);
  for (int k = 0; k <= 10; ++k) CHECK(rows[k].u == doctest::Approx(k / 10.0));
  CHECK(rows[0].spearman == rows[10].spearman);
  CHECK(rows[0].iou == doctest::Approx(s.edits()[0].iou));
  CHECK(rows[0].timings.has_value());
  CHECK(rows[0].l1_vs_original < rows[10].l1_vs_original);
  CHECK(rows[10].l1_vs_target < rows[0].l1_vs_target);

  const std::string csv = encode_eval_csv(rows);
  CHECK(csv.rfind("edit,label,u,l1_vs_original,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);

  const fs::path out = scratch_dir("eval") / "report.csv";
  cmd_eval(shared_session(), out);
  CHECK(fs::exists(out));
}
