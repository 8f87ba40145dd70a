#pragma once

// Shared splat preparation and per-pixel traversal used by the forward
// renderer, the backward pass, coverage maps and mask unprojection.

#include <cmath>
#include <cstdint>
#include <vector>

#include "progdf/types.hpp"

namespace progdf {
struct RasterSettings;
}

namespace progdf::detail {

inline constexpr int kTile = 16;

struct PreparedSplat {
  Vec2 mean = Vec2::Zero();
  Mat2 conic = Mat2::Identity();  // inverse of the regularized 2D covariance
  double opacity = 0.0;
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
  double radius = 0.0;  // box half-extent in pixels, infinite when unbounded
  std::size_t source = 0;
};

struct Raster {
  std::vector<PreparedSplat> splats;  // front to back
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<std::uint32_t>> bins;  // splat ids per tile, sorted

  const std::vector<std::uint32_t>& bin_for(int x, int y) const {
    return bins[static_cast<std::size_t>(y / kTile) * tiles_x + x / kTile];
  }
};

Raster prepare(const Scene& scene, const Camera& cam, const RasterSettings& settings);

inline bool inside_box(const PreparedSplat& s, const Vec2& p) {
  return std::abs(p.x() - s.mean.x()) <= s.radius && std::abs(p.y() - s.mean.y()) <= s.radius;
}

inline double gaussian_falloff(const PreparedSplat& s, const Vec2& p) {
  const Vec2 d = p - s.mean;
  return std::exp(-0.5 * d.dot(s.conic * d));
}

inline Vec2 pixel_center(int x, int y) { return Vec2(x + 0.5, y + 0.5); }

}  // namespace progdf::detail

namespace progdf {

template <typename Visit>
void for_each_contribution(const Scene& scene, const Camera& cam,
                           const RasterSettings& settings, Visit&& visit) {
  const detail::Raster r = detail::prepare(scene, cam, settings);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec2 p = detail::pixel_center(x, y);
      const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
      double transmittance = 1.0;
      for (std::uint32_t id : r.bin_for(x, y)) {
        const auto& s = r.splats[id];
        if (!detail::inside_box(s, p)) continue;
        const double alpha =
            std::min(settings.alpha_max, s.opacity * detail::gaussian_falloff(s, p));
        if (alpha < settings.alpha_min) continue;
        visit(pix, s.source, alpha, transmittance);
        transmittance *= 1.0 - alpha;
      }
    }
  }
}

}  // namespace progdf
