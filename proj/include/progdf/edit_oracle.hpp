#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "progdf/renderer.hpp"
#include "progdf/types.hpp"

namespace progdf {

enum class EditKind { kRecolor, kTranslate, kUniformScale, kBrighten };

const char* edit_kind_name(EditKind kind);

// A procedural edit applied to a selected set of Gaussians.
//
// Document form:
//   {"kind": "recolor" | "translate" | "uniform-scale" | "brighten",
//    "params": {"rgb": [r,g,b]} | {"hue_shift": deg} | {"offset": [x,y,z]}
//              | {"factor": f},
//    "region": {"indices": [...]} | {"range": [begin, end]}
//              | {"mask-file": "region.json"},
//    "label": "...", "seed": 0}
//
// A file may also hold {"edits": [spec, ...]}.
struct EditSpec {
  EditKind kind = EditKind::kRecolor;
  bool has_rgb = false;
  Vec3 rgb = Vec3::Zero();
  double hue_shift_deg = 0.0;
  Vec3 offset = Vec3::Zero();
  double factor = 1.0;

  std::vector<std::size_t> region_indices;
  // Half-open index range; used when begin < end.
  std::size_t range_begin = 0, range_end = 0;
  std::filesystem::path region_file;

  std::string label;
  std::uint64_t seed = 0;
};

// Parses one spec or an {"edits": [...]} list. Relative mask-file paths are
// resolved against `base_dir`.
std::vector<EditSpec> decode_edit_specs(std::string_view text,
                                        const std::filesystem::path& base_dir = {});
std::string encode_edit_spec(const EditSpec& spec);

// Region selected by the spec for a scene of n Gaussians. Throws on
// out-of-range indices or an empty selection.
RegionMask resolve_region(const EditSpec& spec, std::size_t n);

struct EditTarget {
  Scene scene;        // ground-truth edited scene
  RegionMask region;  // exactly the edited Gaussians
};

EditTarget build_edit_target(const Scene& scene, const EditSpec& spec);

// Rotates the hue of an RGB color (HSV model). A shift that is a multiple
// of 360 returns the input unchanged.
Vec3 shift_hue(const Vec3& rgb, double degrees);

std::vector<ImageBuffer> render_views(const Scene& scene, const std::vector<Camera>& cameras,
                                      const RasterSettings& settings = {});

// A pixel is set when the compositing weight of in-region Gaussians exceeds
// 0.5 (the weights of all Gaussians plus the background sum to one).
std::vector<Mask2D> ground_truth_masks(const Scene& scene, const RegionMask& region,
                                       const std::vector<Camera>& cameras,
                                       const RasterSettings& settings = {});

struct RigConfig {
  int azimuth_steps = 24;
  std::vector<double> elevations{-20.0, 20.0};
  double azimuth_offset = 0.0;
  double radius = 3.0;
  double fov_deg = 50.0;
  int width = 64;
  int height = 64;
  Vec3 target = Vec3::Zero();
};

inline constexpr std::size_t kMaxViews = 96;

// Orbit ring cameras, elevation-major. Throws if more than kMaxViews.
std::vector<Camera> orbit_rig(const RigConfig& rig);

struct ViewSet {
  std::vector<Camera> cameras;
  std::vector<ImageBuffer> originals;
  std::vector<ImageBuffer> targets;
  std::vector<Mask2D> masks;
};

ViewSet make_view_set(const Scene& original, const EditTarget& target,
                      const std::vector<Camera>& cameras);

}  // namespace progdf
