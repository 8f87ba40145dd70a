#include "progdf/config.hpp"

#include <set>

#include <json.hpp>

#include "progdf/error.hpp"
#include "progdf/scene_io.hpp"

namespace progdf {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::kFormat, "config: " + what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) config_error("'" + where + "' must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) config_error("unknown key '" + where + "." + k + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("bad value for '" + where + "." + key + "'");
  }
}

void read_vec3(const json& obj, const char* key, Vec3& out, const std::string& where) {
  if (!obj.contains(key)) return;
  std::vector<double> v;
  read(obj, key, v, where);
  if (v.size() != 3) config_error("'" + where + "." + key + "' must have 3 numbers");
  out = Vec3(v[0], v[1], v[2]);
}

template <typename E, typename Parse>
void read_enum(const json& obj, const char* key, E& out, const std::string& where, Parse parse) {
  if (!obj.contains(key)) return;
  std::string s;
  read(obj, key, s, where);
  try {
    out = parse(s);
  } catch (const Error& e) {
    config_error(std::string(where) + "." + key + ": " + e.what());
  }
}

}  // namespace

void PipelineConfig::apply_seed() {
  pgs.seed = seed;
  gdf.seed = seed;
}

void PipelineConfig::validate() const {
  require(mask.epsilon > 0.0 && mask.epsilon <= 1.0, "config: mask.epsilon must be in (0, 1]");
  require(rig.azimuth_steps >= 1 && !rig.elevations.empty() && rig.width >= 3 && rig.height >= 3 &&
              rig.radius > 0.0 && rig.fov_deg > 0.0 && rig.fov_deg < 180.0,
          "config: invalid rig");
  require(pgs.steps >= 1, "config: pgs.steps must be >= 1");
  pgs.validate();
  gdf.validate();
}

PipelineConfig decode_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  PipelineConfig cfg;
  check_keys(doc, "config", {"seed", "rig", "mask", "pgs", "gdf"});
  read(doc, "seed", cfg.seed, "config");

  if (doc.contains("rig")) {
    const json& r = doc["rig"];
    check_keys(r, "rig", {"azimuth_steps", "elevations", "azimuth_offset", "radius", "fov_deg", "width", "height",
                          "target"});
    read(r, "azimuth_steps", cfg.rig.azimuth_steps, "rig");
    read(r, "elevations", cfg.rig.elevations, "rig");
    read(r, "azimuth_offset", cfg.rig.azimuth_offset, "rig");
    read(r, "radius", cfg.rig.radius, "rig");
    read(r, "fov_deg", cfg.rig.fov_deg, "rig");
    read(r, "width", cfg.rig.width, "rig");
    read(r, "height", cfg.rig.height, "rig");
    read_vec3(r, "target", cfg.rig.target, "rig");
  }
  if (doc.contains("mask")) {
    const json& m = doc["mask"];
    check_keys(m, "mask", {"epsilon", "normalization"});
    read(m, "epsilon", cfg.mask.epsilon, "mask");
    read_enum(m, "normalization", cfg.mask.normalization, "mask", parse_normalization);
  }
  if (doc.contains("pgs")) {
    const json& p = doc["pgs"];
    check_keys(p, "pgs", {"steps", "alpha", "beta", "s", "lambda_edit", "lambda_prog", "lambda_render",
                          "lambda_perceptual", "snapshot_interval", "view_order", "progressive_mode", "lr"});
    read(p, "steps", cfg.pgs.steps, "pgs");
    read(p, "alpha", cfg.pgs.schedule.alpha, "pgs");
    read(p, "beta", cfg.pgs.schedule.beta, "pgs");
    read(p, "s", cfg.pgs.schedule.s, "pgs");
    read(p, "lambda_edit", cfg.pgs.lambda_edit, "pgs");
    read(p, "lambda_prog", cfg.pgs.lambda_prog, "pgs");
    read(p, "lambda_render", cfg.pgs.lambda_render, "pgs");
    read(p, "lambda_perceptual", cfg.pgs.lambda_perceptual, "pgs");
    read(p, "snapshot_interval", cfg.pgs.snapshot_interval, "pgs");
    read_enum(p, "view_order", cfg.pgs.view_order, "pgs", parse_view_order);
    read_enum(p, "progressive_mode", cfg.pgs.progressive_mode, "pgs", parse_progressive_mode);
    if (p.contains("lr")) {
      const json& lr = p["lr"];
      check_keys(lr, "pgs.lr", {"position", "log_scale", "rotation", "opacity", "color"});
      read(lr, "position", cfg.pgs.lr.position, "pgs.lr");
      read(lr, "log_scale", cfg.pgs.lr.log_scale, "pgs.lr");
      read(lr, "rotation", cfg.pgs.lr.rotation, "pgs.lr");
      read(lr, "opacity", cfg.pgs.lr.opacity, "pgs.lr");
      read(lr, "color", cfg.pgs.lr.color, "pgs.lr");
    }
  }
  if (doc.contains("gdf")) {
    const json& g = doc["gdf"];
    check_keys(g, "gdf", {"bins", "embed_dim", "pe_frequencies", "hidden", "bank_interval", "iterations",
                          "learning_rate", "learning_rate_final", "lambda_render", "lambda_perceptual", "sampling",
                          "embedding_init", "live"});
    read(g, "bins", cfg.gdf.bins, "gdf");
    read(g, "embed_dim", cfg.gdf.embed_dim, "gdf");
    read(g, "pe_frequencies", cfg.gdf.pe_frequencies, "gdf");
    read(g, "hidden", cfg.gdf.hidden, "gdf");
    read(g, "bank_interval", cfg.gdf.bank_interval, "gdf");
    read(g, "iterations", cfg.gdf.iterations, "gdf");
    read(g, "learning_rate", cfg.gdf.learning_rate, "gdf");
    read(g, "learning_rate_final", cfg.gdf.learning_rate_final, "gdf");
    read(g, "lambda_render", cfg.gdf.lambda_render, "gdf");
    read(g, "lambda_perceptual", cfg.gdf.lambda_perceptual, "gdf");
    read_enum(g, "sampling", cfg.gdf.sampling, "gdf", parse_bank_sampling);
    read_enum(g, "embedding_init", cfg.gdf.embedding_init, "gdf", parse_embedding_init);
    read(g, "live", cfg.live_gdf, "gdf");
  }
  cfg.apply_seed();
  try {
    cfg.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  return cfg;
}

std::string encode_config(const PipelineConfig& cfg) {
  const auto& p = cfg.pgs;
  const auto& g = cfg.gdf;
  json doc = {
      {"seed", cfg.seed},
      {"rig",
       {{"azimuth_steps", cfg.rig.azimuth_steps},
        {"elevations", cfg.rig.elevations},
        {"azimuth_offset", cfg.rig.azimuth_offset},
        {"radius", cfg.rig.radius},
        {"fov_deg", cfg.rig.fov_deg},
        {"width", cfg.rig.width},
        {"height", cfg.rig.height},
        {"target", {cfg.rig.target.x(), cfg.rig.target.y(), cfg.rig.target.z()}}}},
      {"mask", {{"epsilon", cfg.mask.epsilon}, {"normalization", normalization_name(cfg.mask.normalization)}}},
      {"pgs",
       {{"steps", p.steps},
        {"alpha", p.schedule.alpha},
        {"beta", p.schedule.beta},
        {"s", p.schedule.s},
        {"lambda_edit", p.lambda_edit},
        {"lambda_prog", p.lambda_prog},
        {"lambda_render", p.lambda_render},
        {"lambda_perceptual", p.lambda_perceptual},
        {"snapshot_interval", p.snapshot_interval},
        {"view_order", view_order_name(p.view_order)},
        {"progressive_mode", progressive_mode_name(p.progressive_mode)},
        {"lr",
         {{"position", p.lr.position},
          {"log_scale", p.lr.log_scale},
          {"rotation", p.lr.rotation},
          {"opacity", p.lr.opacity},
          {"color", p.lr.color}}}}},
      {"gdf",
       {{"bins", g.bins},
        {"embed_dim", g.embed_dim},
        {"pe_frequencies", g.pe_frequencies},
        {"hidden", g.hidden},
        {"bank_interval", g.bank_interval},
        {"iterations", g.iterations},
        {"learning_rate", g.learning_rate},
        {"learning_rate_final", g.learning_rate_final},
        {"lambda_render", g.lambda_render},
        {"lambda_perceptual", g.lambda_perceptual},
        {"sampling", bank_sampling_name(g.sampling)},
        {"embedding_init", embedding_init_name(g.embedding_init)},
        {"live", cfg.live_gdf}}}};
  return doc.dump(2);
}

PipelineConfig load_config(const std::filesystem::path& path) { return decode_config(read_text_file(path)); }

}  // namespace progdf
