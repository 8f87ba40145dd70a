#include "progdf/edit_oracle.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "progdf/error.hpp"
#include "progdf/scene_io.hpp"

namespace progdf {

using nlohmann::json;

namespace {

[[noreturn]] void spec_error(const std::string& what) {
  fail(ErrorCode::kFormat, "edit spec: " + what);
}

Vec3 read_vec3(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) spec_error(std::string("'") + key + "' must be 3 numbers");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) spec_error(std::string("'") + key + "' must be 3 numbers");
    v[k] = j[k].get<double>();
    if (!std::isfinite(v[k])) spec_error(std::string("'") + key + "' is not finite");
  }
  return v;
}

double read_number(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) spec_error(std::string("missing number '") + key + "'");
  const double v = it->get<double>();
  if (!std::isfinite(v)) spec_error(std::string("'") + key + "' is not finite");
  return v;
}

EditKind parse_kind(const std::string& s) {
  if (s == "recolor") return EditKind::kRecolor;
  if (s == "translate") return EditKind::kTranslate;
  if (s == "uniform-scale") return EditKind::kUniformScale;
  if (s == "brighten") return EditKind::kBrighten;
  spec_error("unknown kind '" + s + "'");
}

EditSpec parse_one(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) spec_error("expected an object");
  EditSpec spec;
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) spec_error("missing 'kind'");
  spec.kind = parse_kind(kind->get<std::string>());

  const json params = j.value("params", json::object());
  if (!params.is_object()) spec_error("'params' must be an object");
  switch (spec.kind) {
    case EditKind::kRecolor:
      if (params.contains("rgb")) {
        spec.has_rgb = true;
        spec.rgb = read_vec3(params["rgb"], "rgb");
        if ((spec.rgb.array() < 0.0).any() || (spec.rgb.array() > 1.0).any()) {
          spec_error("'rgb' outside [0, 1]");
        }
      } else if (params.contains("hue_shift")) {
        spec.hue_shift_deg = read_number(params, "hue_shift");
      } else {
        spec_error("recolor needs 'rgb' or 'hue_shift'");
      }
      break;
    case EditKind::kTranslate:
      if (!params.contains("offset")) spec_error("translate needs 'offset'");
      spec.offset = read_vec3(params["offset"], "offset");
      break;
    case EditKind::kUniformScale:
    case EditKind::kBrighten:
      spec.factor = read_number(params, "factor");
      if (!(spec.factor > 0.0)) spec_error("'factor' must be positive");
      break;
  }

  auto region = j.find("region");
  if (region == j.end() || !region->is_object()) spec_error("missing 'region'");
  if (auto it = region->find("indices"); it != region->end()) {
    if (!it->is_array()) spec_error("'indices' must be an array");
    for (const auto& e : *it) {
      if (!e.is_number_unsigned()) spec_error("region indices must be non-negative integers");
      spec.region_indices.push_back(e.get<std::size_t>());
    }
  } else if (auto it = region->find("range"); it != region->end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_unsigned() ||
        !(*it)[1].is_number_unsigned()) {
      spec_error("'range' must be [begin, end]");
    }
    spec.range_begin = (*it)[0].get<std::size_t>();
    spec.range_end = (*it)[1].get<std::size_t>();
    if (spec.range_end <= spec.range_begin) spec_error("'range' is empty");
  } else if (auto it = region->find("mask-file"); it != region->end()) {
    if (!it->is_string()) spec_error("'mask-file' must be a path");
    std::filesystem::path p = it->get<std::string>();
    spec.region_file = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  } else {
    spec_error("region needs 'indices', 'range' or 'mask-file'");
  }

  spec.label = j.value("label", std::string(edit_kind_name(spec.kind)));
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) spec_error("'seed' must be a non-negative integer");
    spec.seed = it->get<std::uint64_t>();
  }
  return spec;
}

Vec3 centroid(const Scene& scene, const RegionMask& region) {
  Vec3 c = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (!region.test(i)) continue;
    c += scene.gaussians[i].position;
    ++n;
  }
  return c / static_cast<double>(n);
}

}  // namespace

const char* edit_kind_name(EditKind kind) {
  switch (kind) {
    case EditKind::kRecolor: return "recolor";
    case EditKind::kTranslate: return "translate";
    case EditKind::kUniformScale: return "uniform-scale";
    case EditKind::kBrighten: return "brighten";
  }
  return "unknown";
}

std::vector<EditSpec> decode_edit_specs(std::string_view text,
                                        const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    spec_error(std::string("not valid JSON: ") + e.what());
  }
  std::vector<EditSpec> out;
  if (doc.is_object() && doc.contains("edits")) {
    if (!doc["edits"].is_array() || doc["edits"].empty()) spec_error("'edits' must be a non-empty array");
    for (const auto& e : doc["edits"]) out.push_back(parse_one(e, base_dir));
  } else {
    out.push_back(parse_one(doc, base_dir));
  }
  return out;
}

std::string encode_edit_spec(const EditSpec& spec) {
  json j;
  j["kind"] = edit_kind_name(spec.kind);
  json params = json::object();
  switch (spec.kind) {
    case EditKind::kRecolor:
      if (spec.has_rgb) {
        params["rgb"] = {spec.rgb[0], spec.rgb[1], spec.rgb[2]};
      } else {
        params["hue_shift"] = spec.hue_shift_deg;
      }
      break;
    case EditKind::kTranslate:
      params["offset"] = {spec.offset[0], spec.offset[1], spec.offset[2]};
      break;
    default:
      params["factor"] = spec.factor;
  }
  j["params"] = params;
  if (!spec.region_indices.empty()) {
    j["region"] = {{"indices", spec.region_indices}};
  } else if (spec.range_end > spec.range_begin) {
    j["region"] = {{"range", {spec.range_begin, spec.range_end}}};
  } else {
    j["region"] = {{"mask-file", spec.region_file.string()}};
  }
  j["label"] = spec.label;
  j["seed"] = spec.seed;
  return j.dump(2);
}

RegionMask resolve_region(const EditSpec& spec, std::size_t n) {
  RegionMask mask(n);
  if (!spec.region_indices.empty()) {
    for (std::size_t i : spec.region_indices) {
      if (i >= n) {
        fail(ErrorCode::kInvalidArgument, "edit region index " + std::to_string(i) +
                                              " out of range for " + std::to_string(n) +
                                              " Gaussians");
      }
      mask.set(i);
    }
  } else if (spec.range_end > spec.range_begin) {
    if (spec.range_end > n) {
      fail(ErrorCode::kInvalidArgument, "edit region range exceeds " + std::to_string(n) + " Gaussians");
    }
    for (std::size_t i = spec.range_begin; i < spec.range_end; ++i) mask.set(i);
  } else if (!spec.region_file.empty()) {
    mask = load_region(spec.region_file);
    if (mask.size() != n) {
      fail(ErrorCode::kInvalidArgument, "region file " + spec.region_file.string() + " has " +
                                            std::to_string(mask.size()) + " entries, scene has " +
                                            std::to_string(n));
    }
  }
  if (mask.count() == 0) fail(ErrorCode::kInvalidArgument, "edit region is empty");
  return mask;
}

Vec3 shift_hue(const Vec3& rgb, double degrees) {
  double turns = std::fmod(degrees, 360.0);
  if (turns == 0.0) return rgb;
  if (turns < 0.0) turns += 360.0;

  const double mx = rgb.maxCoeff(), mn = rgb.minCoeff(), chroma = mx - mn;
  if (chroma == 0.0) return rgb;
  double h;
  if (mx == rgb[0]) {
    h = std::fmod((rgb[1] - rgb[2]) / chroma, 6.0);
  } else if (mx == rgb[1]) {
    h = (rgb[2] - rgb[0]) / chroma + 2.0;
  } else {
    h = (rgb[0] - rgb[1]) / chroma + 4.0;
  }
  h = std::fmod(h * 60.0 + turns + 360.0, 360.0) / 60.0;
  const double x = chroma * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  Vec3 out;
  switch (static_cast<int>(h)) {
    case 0: out = Vec3(chroma, x, 0); break;
    case 1: out = Vec3(x, chroma, 0); break;
    case 2: out = Vec3(0, chroma, x); break;
    case 3: out = Vec3(0, x, chroma); break;
    case 4: out = Vec3(x, 0, chroma); break;
    default: out = Vec3(chroma, 0, x); break;
  }
  return (out.array() + mn).cwiseMax(0.0).cwiseMin(1.0);
}

EditTarget build_edit_target(const Scene& scene, const EditSpec& spec) {
  EditTarget out{scene, resolve_region(spec, scene.size())};
  const Vec3 center = spec.kind == EditKind::kUniformScale ? centroid(scene, out.region) : Vec3::Zero();
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (!out.region.test(i)) continue;
    GaussianPrimitive& g = out.scene.gaussians[i];
    switch (spec.kind) {
      case EditKind::kRecolor:
        g.color = spec.has_rgb ? spec.rgb : shift_hue(g.color, spec.hue_shift_deg);
        break;
      case EditKind::kTranslate:
        g.position += spec.offset;
        break;
      case EditKind::kUniformScale:
        g.scale *= spec.factor;
        g.position = center + spec.factor * (g.position - center);
        break;
      case EditKind::kBrighten:
        g.color = (g.color * spec.factor).cwiseMin(1.0);
        break;
    }
  }
  return out;
}

std::vector<ImageBuffer> render_views(const Scene& scene, const std::vector<Camera>& cameras,
                                      const RasterSettings& settings) {
  std::vector<ImageBuffer> out;
  out.reserve(cameras.size());
  for (const Camera& cam : cameras) out.push_back(render(scene, cam, settings));
  return out;
}

std::vector<Mask2D> ground_truth_masks(const Scene& scene, const RegionMask& region,
                                       const std::vector<Camera>& cameras,
                                       const RasterSettings& settings) {
  require(region.size() == scene.size(), "ground_truth_masks: region length does not match scene");
  std::vector<Mask2D> out;
  out.reserve(cameras.size());
  for (const Camera& cam : cameras) {
    const CoverageMaps cov = coverage(scene, cam, region, settings);
    Mask2D m(cam.width, cam.height);
    for (std::size_t p = 0; p < m.bits.size(); ++p) m.bits[p] = cov.selected[p] > 0.5 ? 1 : 0;
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Camera> orbit_rig(const RigConfig& rig) {
  require(rig.azimuth_steps >= 1 && !rig.elevations.empty(), "orbit rig: needs at least one view");
  const std::size_t n = static_cast<std::size_t>(rig.azimuth_steps) * rig.elevations.size();
  if (n > kMaxViews) {
    fail(ErrorCode::kInvalidArgument, "orbit rig: " + std::to_string(n) + " views exceeds the limit of " +
                                          std::to_string(kMaxViews));
  }
  std::vector<Camera> cams;
  cams.reserve(n);
  for (double el : rig.elevations) {
    for (int a = 0; a < rig.azimuth_steps; ++a) {
      const double az = rig.azimuth_offset + 360.0 * a / rig.azimuth_steps;
      cams.push_back(Camera::orbit(az, el, rig.radius, rig.fov_deg, rig.width, rig.height, rig.target));
    }
  }
  return cams;
}

ViewSet make_view_set(const Scene& original, const EditTarget& target,
                      const std::vector<Camera>& cameras) {
  ViewSet v;
  v.cameras = cameras;
  v.originals = render_views(original, cameras);
  v.targets = render_views(target.scene, cameras);
  v.masks = ground_truth_masks(original, target.region, cameras);
  return v;
}

}  // namespace progdf
