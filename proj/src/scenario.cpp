#include "progdf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace progdf {

namespace {

void add_blob(Scene& scene, std::mt19937_64& rng, const Vec3& center, double radius,
              const Vec3& base_color, int count) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    // Uniform in a ball: random direction, radius ~ cbrt(u).
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    dir.normalize();
    GaussianPrimitive g;
    g.position = center + dir * radius * std::cbrt(unit(rng));
    for (int k = 0; k < 3; ++k) g.scale[k] = 0.05 + 0.06 * unit(rng);
    g.rotation = Vec4(normal(rng), normal(rng), normal(rng), normal(rng)).normalized();
    g.opacity = 0.6 + 0.35 * unit(rng);
    for (int k = 0; k < 3; ++k) {
      g.color[k] = std::clamp(base_color[k] + 0.1 * (unit(rng) - 0.5), 0.02, 0.98);
    }
    scene.gaussians.push_back(g);
  }
}

}  // namespace

StandardScenario standard_scenario(std::uint64_t seed, int gaussians_per_blob) {
  std::mt19937_64 rng(seed);
  StandardScenario s;
  s.scene.background = Vec3::Zero();
  add_blob(s.scene, rng, Vec3(-0.5, 0.0, 0.0), 0.35, Vec3(0.85, 0.15, 0.1), gaussians_per_blob);
  add_blob(s.scene, rng, Vec3(0.5, 0.0, 0.0), 0.35, Vec3(0.15, 0.2, 0.85), gaussians_per_blob);

  s.edit.kind = EditKind::kRecolor;
  s.edit.has_rgb = true;
  s.edit.rgb = Vec3(0.0, 1.0, 0.0);
  s.edit.range_begin = 0;
  s.edit.range_end = static_cast<std::size_t>(gaussians_per_blob);
  s.edit.label = "recolor left blob green";
  s.edit.seed = seed;

  s.rig.azimuth_steps = 8;
  s.rig.elevations = {-20.0, 20.0};
  s.rig.radius = 3.0;
  s.rig.fov_deg = 45.0;
  s.rig.width = s.rig.height = 64;

  s.heldout = s.rig;
  s.heldout.azimuth_steps = 4;
  s.heldout.azimuth_offset = 22.5;
  s.heldout.elevations = {-10.0, 30.0};
  return s;
}

}  // namespace progdf
