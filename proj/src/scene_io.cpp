#include "progdf/scene_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "progdf/error.hpp"
#include "progdf/model.hpp"

namespace progdf {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) {
  fail(ErrorCode::kFormat, "scene document: " + what);
}

template <int N>
Eigen::Matrix<double, N, 1> read_vec(const json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array() || it->size() != N) {
    schema_error("gaussian " + std::to_string(index) + ": '" + key + "' must be an array of " +
                 std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int k = 0; k < N; ++k) {
    const json& e = (*it)[static_cast<std::size_t>(k)];
    if (!e.is_number()) schema_error("gaussian " + std::to_string(index) + ": '" + key +
                                     "' has a non-numeric entry");
    v[k] = e.get<double>();
    if (!std::isfinite(v[k])) schema_error("gaussian " + std::to_string(index) + ": '" + key +
                                           "' is not finite");
  }
  return v;
}

json to_array(const auto& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

void check_invariants(const GaussianPrimitive& g, std::size_t i) {
  const std::string at = "gaussian " + std::to_string(i) + ": ";
  if ((g.scale.array() <= 0.0).any()) schema_error(at + "scale must be positive");
  if (g.opacity < 0.0 || g.opacity > 1.0) schema_error(at + "opacity outside [0, 1]");
  if ((g.color.array() < 0.0).any() || (g.color.array() > 1.0).any()) {
    schema_error(at + "color outside [0, 1]");
  }
}

Vec4 normalized_rotation(const Vec4& q, std::size_t i) {
  const double n = q.norm();
  if (!(n > 0.0)) schema_error("gaussian " + std::to_string(i) + ": degenerate rotation");
  return std::abs(n - 1.0) > 1e-12 ? Vec4(q / n) : q;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[at + b]) << (8 * b);
  return v;
}

}  // namespace

std::string encode_scene(const Scene& scene) {
  json doc;
  doc["version"] = kSceneFormatVersion;
  doc["background"] = to_array(scene.background);
  json list = json::array();
  for (const auto& g : scene.gaussians) {
    list.push_back({{"pos", to_array(g.position)},
                    {"scale", to_array(g.scale)},
                    {"rot", to_array(g.rotation)},
                    {"opacity", g.opacity},
                    {"color", to_array(g.color)}});
  }
  doc["gaussians"] = std::move(list);
  return doc.dump();
}

Scene decode_scene(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_error("top level must be an object");
  auto version = doc.find("version");
  if (version == doc.end() || !version->is_number_integer()) schema_error("missing version tag");
  if (version->get<int>() != kSceneFormatVersion) {
    schema_error("unsupported version " + version->dump());
  }

  Scene scene;
  if (auto bg = doc.find("background"); bg != doc.end()) {
    json holder = {{"background", *bg}};
    scene.background = read_vec<3>(holder, "background", 0);
  }
  auto list = doc.find("gaussians");
  if (list == doc.end() || !list->is_array()) schema_error("'gaussians' must be an array");
  scene.gaussians.reserve(list->size());
  for (std::size_t i = 0; i < list->size(); ++i) {
    const json& e = (*list)[i];
    if (!e.is_object()) schema_error("gaussian " + std::to_string(i) + " must be an object");
    GaussianPrimitive g;
    g.position = read_vec<3>(e, "pos", i);
    g.scale = read_vec<3>(e, "scale", i);
    g.rotation = normalized_rotation(read_vec<4>(e, "rot", i), i);
    auto op = e.find("opacity");
    if (op == e.end() || !op->is_number()) schema_error("gaussian " + std::to_string(i) +
                                                        ": missing opacity");
    g.opacity = op->get<double>();
    if (!std::isfinite(g.opacity)) schema_error("gaussian " + std::to_string(i) +
                                                ": opacity is not finite");
    g.color = read_vec<3>(e, "color", i);
    check_invariants(g, i);
    scene.gaussians.push_back(g);
  }
  return scene;
}

std::vector<std::uint8_t> encode_scene_binary(const Scene& scene) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + scene.size() * raw::kDim * 4);
  for (char c : std::string_view("PGDF")) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, static_cast<std::uint32_t>(kSceneFormatVersion));
  put_u32(out, static_cast<std::uint32_t>(scene.size()));
  for (const auto& g : scene.gaussians) {
    for (int k = 0; k < 3; ++k) put_f32(out, g.position[k]);
    for (int k = 0; k < 3; ++k) put_f32(out, g.scale[k]);
    for (int k = 0; k < 4; ++k) put_f32(out, g.rotation[k]);
    put_f32(out, g.opacity);
    for (int k = 0; k < 3; ++k) put_f32(out, g.color[k]);
  }
  return out;
}

Scene decode_scene_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "PGDF", 4) != 0) {
    fail(ErrorCode::kFormat, "binary scene: bad magic");
  }
  if (get_u32(bytes, 4) != static_cast<std::uint32_t>(kSceneFormatVersion)) {
    fail(ErrorCode::kFormat, "binary scene: unsupported version");
  }
  const std::size_t count = get_u32(bytes, 8);
  if (bytes.size() != 12 + count * raw::kDim * 4) {
    fail(ErrorCode::kFormat, "binary scene: size does not match count");
  }
  Scene scene;
  scene.gaussians.resize(count);
  std::size_t at = 12;
  auto next = [&]() {
    const double v = std::bit_cast<float>(get_u32(bytes, at));
    at += 4;
    return v;
  };
  for (std::size_t i = 0; i < count; ++i) {
    auto& g = scene.gaussians[i];
    for (int k = 0; k < 3; ++k) g.position[k] = next();
    for (int k = 0; k < 3; ++k) g.scale[k] = next();
    Vec4 q;
    for (int k = 0; k < 4; ++k) q[k] = next();
    g.opacity = next();
    for (int k = 0; k < 3; ++k) g.color[k] = next();
    if (!g.position.allFinite() || !g.scale.allFinite() || !q.allFinite() ||
        !std::isfinite(g.opacity) || !g.color.allFinite()) {
      fail(ErrorCode::kFormat, "binary scene: non-finite value in gaussian " + std::to_string(i));
    }
    g.rotation = normalized_rotation(q, i);
    check_invariants(g, i);
  }
  return scene;
}

std::string encode_region(const RegionMask& mask) {
  json doc;
  doc["version"] = 1;
  doc["count"] = mask.size();
  doc["indices"] = mask.indices();
  return doc.dump();
}

RegionMask decode_region(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kFormat, std::string("region document: malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("version", 0) != 1 || !doc.contains("count") ||
      !doc["count"].is_number_unsigned() || !doc.contains("indices") ||
      !doc["indices"].is_array()) {
    fail(ErrorCode::kFormat, "region document: expected {version: 1, count, indices}");
  }
  const auto n = doc["count"].get<std::size_t>();
  std::vector<std::size_t> idx;
  for (const auto& e : doc["indices"]) {
    if (!e.is_number_unsigned()) fail(ErrorCode::kFormat, "region document: bad index");
    idx.push_back(e.get<std::size_t>());
  }
  try {
    return RegionMask::from_indices(n, idx);
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("region document: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

Scene load_scene(const std::filesystem::path& path) {
  if (path.extension() == ".bin" || path.extension() == ".pgdf") {
    return decode_scene_binary(read_binary_file(path));
  }
  return decode_scene(read_text_file(path));
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  write_text_file(path, encode_scene(scene));
}

RegionMask load_region(const std::filesystem::path& path) {
  return decode_region(read_text_file(path));
}

void save_region(const std::filesystem::path& path, const RegionMask& mask) {
  write_text_file(path, encode_region(mask));
}

}  // namespace progdf
