#pragma once

// Scene generators and independent reference implementations used only by
// the test suites. Nothing here calls into the renderer under test.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "progdf/model.hpp"
#include "progdf/types.hpp"

namespace progdf::testing {

inline GaussianPrimitive random_gaussian(std::mt19937_64& rng, double extent = 0.8,
                                         double min_scale = 0.08, double max_scale = 0.35) {
  std::uniform_real_distribution<double> pos(-extent, extent);
  std::uniform_real_distribution<double> sc(min_scale, max_scale);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  GaussianPrimitive g;
  g.position = Vec3(pos(rng), pos(rng), pos(rng));
  g.scale = Vec3(sc(rng), sc(rng), sc(rng));
  Vec4 q(normal(rng), normal(rng), normal(rng), normal(rng));
  g.rotation = q.normalized();
  g.opacity = 0.2 + 0.75 * unit(rng);
  g.color = Vec3(0.05 + 0.9 * unit(rng), 0.05 + 0.9 * unit(rng), 0.05 + 0.9 * unit(rng));
  return g;
}

inline Scene random_scene(std::uint64_t seed, int n, double extent = 0.8) {
  std::mt19937_64 rng(seed);
  Scene s;
  for (int i = 0; i < n; ++i) s.gaussians.push_back(random_gaussian(rng, extent));
  std::uniform_real_distribution<double> unit(0.0, 0.3);
  s.background = Vec3(unit(rng), unit(rng), unit(rng));
  return s;
}

inline Camera test_camera(int size, double azimuth = 30.0, double elevation = 15.0) {
  return Camera::orbit(azimuth, elevation, 4.0, 45.0, size, size);
}

// Composites every Gaussian at every pixel, front to back by camera depth,
// with only the 0.99 alpha clamp and near-plane culling. Covariance and
// projection are derived independently through Eigen's quaternion and a
// finite-difference-free closed form.
inline ImageBuffer brute_force_render(const Scene& scene, const Camera& cam,
                                      double cov_reg = 0.3, double alpha_max = 0.99,
                                      double near_plane = 0.01) {
  struct Item {
    double depth;
    std::size_t index;
    Eigen::Vector2d mean;
    Eigen::Matrix2d inv_cov;
    double opacity;
    Eigen::Vector3d color;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& g = scene.gaussians[i];
    const Eigen::Vector3d p = cam.rotation * g.position + cam.translation;
    if (p.z() <= near_plane) continue;
    Eigen::Quaterniond q(g.rotation[0], g.rotation[1], g.rotation[2], g.rotation[3]);
    const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
    Eigen::Matrix3d s2 = Eigen::Matrix3d::Zero();
    for (int k = 0; k < 3; ++k) s2(k, k) = g.scale[k] * g.scale[k];
    const Eigen::Matrix3d world_cov = r * s2 * r.transpose();
    const Eigen::Matrix3d cam_cov = cam.rotation * world_cov * cam.rotation.transpose();
    Eigen::Matrix<double, 2, 3> jac;
    const double iz = 1.0 / p.z();
    jac << cam.fx * iz, 0.0, -cam.fx * p.x() * iz * iz, 0.0, cam.fy * iz, -cam.fy * p.y() * iz * iz;
    Eigen::Matrix2d cov2 = jac * cam_cov * jac.transpose();
    cov2(0, 0) += cov_reg;
    cov2(1, 1) += cov_reg;
    const double det = cov2.determinant();
    Eigen::Matrix2d inv;
    inv << cov2(1, 1) / det, -cov2(0, 1) / det, -cov2(1, 0) / det, cov2(0, 0) / det;
    items.push_back({p.z(), i, Eigen::Vector2d(cam.fx * p.x() * iz + cam.cx, cam.fy * p.y() * iz + cam.cy),
                     inv, g.opacity, g.color});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
  });
  ImageBuffer img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      double trans = 1.0;
      for (const auto& it : items) {
        const Eigen::Vector2d d(x + 0.5 - it.mean.x(), y + 0.5 - it.mean.y());
        const double a = std::min(alpha_max, it.opacity * std::exp(-0.5 * d.dot(it.inv_cov * d)));
        c += it.color * a * trans;
        trans *= 1.0 - a;
      }
      c += scene.background * trans;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
    }
  }
  return img;
}

inline double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
  return m;
}

// Scene with Gaussian `index` moved to raw parameters `raw`.
inline Scene with_raw(const Scene& scene, std::size_t index, const RawParams& raw) {
  Scene out = scene;
  out.gaussians[index] = activate(raw);
  return out;
}

struct GradientCheck {
  int checked = 0;
  int passed = 0;
  double pass_fraction() const { return checked == 0 ? 1.0 : static_cast<double>(passed) / checked; }
};

inline double mean_square(const ImageBuffer& img) {
  double s = 0.0;
  for (double v : img.pixels) s += v * v;
  return s / static_cast<double>(img.pixels.size());
}

// Compares analytic raw-parameter gradients of L = mean squared pixel value
// against central differences in raw space.
template <typename Render, typename Backward>
GradientCheck check_mean_square_gradients(const Scene& scene, const Camera& cam, Render&& render_fn,
                                          Backward&& backward_fn, double h = 1e-4,
                                          double fd_floor = 1e-6, double rel_tol = 1e-2) {
  const ImageBuffer img = render_fn(scene, cam);
  ImageBuffer adjoint(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    adjoint.pixels[i] = 2.0 * img.pixels[i] / static_cast<double>(img.pixels.size());
  }
  const auto grads = backward_fn(scene, cam, adjoint);
  GradientCheck out;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const RawParams base = deactivate(scene.gaussians[i]);
    for (int k = 0; k < raw::kDim; ++k) {
      RawParams plus = base, minus = base;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (mean_square(render_fn(with_raw(scene, i, plus), cam)) -
                         mean_square(render_fn(with_raw(scene, i, minus), cam))) /
                        (2.0 * h);
      if (std::abs(fd) <= fd_floor) continue;
      ++out.checked;
      if (std::abs(grads[i][k] - fd) / std::abs(fd) < rel_tol) ++out.passed;
    }
  }
  return out;
}

}  // namespace progdf::testing
