#include "progdf/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "progdf/error.hpp"
#include "progdf/model.hpp"

namespace progdf {

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

struct Projection {
  Vec3 t_cam;
  Mat23 jacobian;
  Mat3 cov_cam;
  Mat2 cov2d;  // regularized
  Vec2 mean;
};

std::optional<Projection> project_detail(const GaussianPrimitive& g, const Camera& cam,
                                         const RasterSettings& settings) {
  Projection p;
  p.t_cam = cam.to_camera(g.position);
  const double tz = p.t_cam.z();
  if (tz <= settings.near_plane) return std::nullopt;
  const double tx = p.t_cam.x(), ty = p.t_cam.y();
  p.mean = Vec2(cam.fx * tx / tz + cam.cx, cam.fy * ty / tz + cam.cy);
  p.jacobian << cam.fx / tz, 0.0, -cam.fx * tx / (tz * tz),
                0.0, cam.fy / tz, -cam.fy * ty / (tz * tz);
  p.cov_cam = cam.rotation * covariance(g) * cam.rotation.transpose();
  p.cov2d = p.jacobian * p.cov_cam * p.jacobian.transpose();
  p.cov2d(0, 1) = p.cov2d(1, 0) = 0.5 * (p.cov2d(0, 1) + p.cov2d(1, 0));
  p.cov2d += settings.cov_regularizer * Mat2::Identity();
  return p;
}

double max_eigenvalue(const Mat2& c) {
  const double mid = 0.5 * (c(0, 0) + c(1, 1));
  const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  return mid + std::sqrt(std::max(0.1, mid * mid - det));
}

// d(loss)/d(quaternion) given d(loss)/d(rotation matrix) for unit q.
Vec4 rotation_matrix_backward(const Vec4& q, const Mat3& dr) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 dw, dx, dy, dz;
  dw << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
  dx << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
  dy << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
  dz << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
  return Vec4(dr.cwiseProduct(dw).sum(), dr.cwiseProduct(dx).sum(),
              dr.cwiseProduct(dy).sum(), dr.cwiseProduct(dz).sum());
}

struct SplatAdjoint {
  Vec2 mean = Vec2::Zero();
  Mat2 conic = Mat2::Zero();
  double opacity = 0.0;
  Vec3 color = Vec3::Zero();
};

struct Contribution {
  std::uint32_t id;
  double alpha;
  double transmittance;
  double falloff;
  bool clamped;
};

}  // namespace

namespace detail {

Raster prepare(const Scene& scene, const Camera& cam, const RasterSettings& settings) {
  require(cam.is_valid(), "invalid camera");
  Raster r;
  r.splats.reserve(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& g = scene.gaussians[i];
    auto proj = project_detail(g, cam, settings);
    if (!proj) continue;
    PreparedSplat s;
    s.mean = proj->mean;
    s.conic = proj->cov2d.inverse();
    s.opacity = g.opacity;
    s.color = g.color;
    s.depth = proj->t_cam.z();
    s.source = i;
    s.radius = settings.bbox_sigma > 0.0
                   ? settings.bbox_sigma * std::sqrt(max_eigenvalue(proj->cov2d))
                   : std::numeric_limits<double>::infinity();
    r.splats.push_back(s);
  }
  std::stable_sort(r.splats.begin(), r.splats.end(),
                   [](const PreparedSplat& a, const PreparedSplat& b) {
                     if (a.depth != b.depth) return a.depth < b.depth;
                     return a.source < b.source;
                   });

  r.tiles_x = (cam.width + kTile - 1) / kTile;
  r.tiles_y = (cam.height + kTile - 1) / kTile;
  r.bins.assign(static_cast<std::size_t>(r.tiles_x) * r.tiles_y, {});
  for (std::uint32_t id = 0; id < r.splats.size(); ++id) {
    const auto& s = r.splats[id];
    int x0 = 0, x1 = r.tiles_x - 1, y0 = 0, y1 = r.tiles_y - 1;
    if (std::isfinite(s.radius)) {
      // Pixel centers sit at integer + 0.5.
      const double lo_x = std::ceil(s.mean.x() - s.radius - 0.5);
      const double hi_x = std::floor(s.mean.x() + s.radius - 0.5);
      const double lo_y = std::ceil(s.mean.y() - s.radius - 0.5);
      const double hi_y = std::floor(s.mean.y() + s.radius - 0.5);
      if (hi_x < 0 || hi_y < 0 || lo_x > cam.width - 1 || lo_y > cam.height - 1) continue;
      x0 = static_cast<int>(std::max(0.0, lo_x)) / kTile;
      x1 = static_cast<int>(std::min<double>(cam.width - 1, hi_x)) / kTile;
      y0 = static_cast<int>(std::max(0.0, lo_y)) / kTile;
      y1 = static_cast<int>(std::min<double>(cam.height - 1, hi_y)) / kTile;
    }
    for (int ty = y0; ty <= y1; ++ty) {
      for (int tx = x0; tx <= x1; ++tx) {
        r.bins[static_cast<std::size_t>(ty) * r.tiles_x + tx].push_back(id);
      }
    }
  }
  return r;
}

}  // namespace detail

std::optional<Splat2D> project_gaussian(const GaussianPrimitive& g, const Camera& cam,
                                        const RasterSettings& settings) {
  auto p = project_detail(g, cam, settings);
  if (!p) return std::nullopt;
  Splat2D s;
  s.mean = p->mean;
  s.cov = p->cov2d;
  s.depth = p->t_cam.z();
  return s;
}

ImageBuffer render(const Scene& scene, const Camera& cam, const RasterSettings& settings) {
  const detail::Raster r = detail::prepare(scene, cam, settings);
  ImageBuffer img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec2 p = detail::pixel_center(x, y);
      Vec3 c = Vec3::Zero();
      double transmittance = 1.0;
      for (std::uint32_t id : r.bin_for(x, y)) {
        const auto& s = r.splats[id];
        if (!detail::inside_box(s, p)) continue;
        const double alpha =
            std::min(settings.alpha_max, s.opacity * detail::gaussian_falloff(s, p));
        if (alpha < settings.alpha_min) continue;
        c += s.color * (alpha * transmittance);
        transmittance *= 1.0 - alpha;
      }
      c += scene.background * transmittance;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
    }
  }
  return img;
}

RenderGradients render_backward(const Scene& scene, const Camera& cam,
                                const ImageBuffer& d_image, const RasterSettings& settings) {
  if (d_image.width != cam.width || d_image.height != cam.height ||
      d_image.pixels.size() != static_cast<std::size_t>(cam.width) * cam.height * 3) {
    fail(ErrorCode::kInvalidArgument, "render_backward: adjoint dimensions do not match camera");
  }
  const detail::Raster r = detail::prepare(scene, cam, settings);
  std::vector<SplatAdjoint> adj(r.splats.size());
  std::vector<Contribution> hits;

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 g(d_image.at(x, y, 0), d_image.at(x, y, 1), d_image.at(x, y, 2));
      if (g.isZero(0.0)) continue;
      const Vec2 p = detail::pixel_center(x, y);
      hits.clear();
      double transmittance = 1.0;
      for (std::uint32_t id : r.bin_for(x, y)) {
        const auto& s = r.splats[id];
        if (!detail::inside_box(s, p)) continue;
        const double falloff = detail::gaussian_falloff(s, p);
        const double raw_alpha = s.opacity * falloff;
        const bool clamped = raw_alpha > settings.alpha_max;
        const double alpha = clamped ? settings.alpha_max : raw_alpha;
        if (alpha < settings.alpha_min) continue;
        hits.push_back({id, alpha, transmittance, falloff, clamped});
        transmittance *= 1.0 - alpha;
      }
      // Color carried by everything behind the current splat.
      double behind = g.dot(scene.background) * transmittance;
      for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
        const auto& s = r.splats[it->id];
        auto& a = adj[it->id];
        const double weight = it->alpha * it->transmittance;
        const double g_dot_c = g.dot(s.color);
        a.color += g * weight;
        const double d_alpha = it->transmittance * g_dot_c - behind / (1.0 - it->alpha);
        behind += g_dot_c * weight;
        if (it->clamped) continue;
        a.opacity += d_alpha * it->falloff;
        const double d_power = d_alpha * s.opacity * it->falloff;
        const Vec2 d = p - s.mean;
        a.mean += d_power * (s.conic * d);
        a.conic += (-0.5 * d_power) * (d * d.transpose());
      }
    }
  }

  RenderGradients grads(scene.size(), RawVector{});
  for (std::size_t id = 0; id < r.splats.size(); ++id) {
    const auto& s = r.splats[id];
    const auto& a = adj[id];
    const auto& gp = scene.gaussians[s.source];
    RawVector& out = grads[s.source];

    const double op = gp.opacity;
    out[raw::kOpacityLogit] = a.opacity * op * (1.0 - op);
    for (int k = 0; k < 3; ++k) {
      const double c = gp.color[k];
      out[raw::kColorLogit + k] = a.color[k] * c * (1.0 - c);
    }

    const auto proj = project_detail(gp, cam, settings);
    const Projection& pr = *proj;
    const Mat2 d_cov2d = -s.conic * a.conic * s.conic;
    const Mat23 d_jac = 2.0 * d_cov2d * pr.jacobian * pr.cov_cam;
    const Mat3 d_cov_cam = pr.jacobian.transpose() * d_cov2d * pr.jacobian;

    const double tx = pr.t_cam.x(), ty = pr.t_cam.y(), tz = pr.t_cam.z();
    const double fx = cam.fx, fy = cam.fy;
    Vec3 d_t = Vec3::Zero();
    d_t.x() += a.mean.x() * fx / tz;
    d_t.y() += a.mean.y() * fy / tz;
    d_t.z() += -a.mean.x() * fx * tx / (tz * tz) - a.mean.y() * fy * ty / (tz * tz);
    d_t.z() += d_jac(0, 0) * (-fx / (tz * tz)) + d_jac(0, 2) * (2.0 * fx * tx / (tz * tz * tz)) +
               d_jac(1, 1) * (-fy / (tz * tz)) + d_jac(1, 2) * (2.0 * fy * ty / (tz * tz * tz));
    d_t.x() += d_jac(0, 2) * (-fx / (tz * tz));
    d_t.y() += d_jac(1, 2) * (-fy / (tz * tz));
    const Vec3 d_pos = cam.rotation.transpose() * d_t;
    for (int k = 0; k < 3; ++k) out[raw::kPosition + k] = d_pos[k];

    const Mat3 d_sigma = cam.rotation.transpose() * d_cov_cam * cam.rotation;
    const Mat3 rot = rotation_matrix(gp.rotation);
    const Mat3 m = rot * gp.scale.asDiagonal();
    const Mat3 d_m = (d_sigma + d_sigma.transpose()) * m;
    const Mat3 d_rot = d_m * gp.scale.asDiagonal();
    const Mat3 rt_dm = rot.transpose() * d_m;
    for (int k = 0; k < 3; ++k) out[raw::kLogScale + k] = rt_dm(k, k) * gp.scale[k];

    const Vec4 d_qhat = rotation_matrix_backward(gp.rotation, d_rot);
    const Vec4 d_q = d_qhat - gp.rotation * gp.rotation.dot(d_qhat);
    for (int k = 0; k < 4; ++k) out[raw::kQuaternion + k] = d_q[k];
  }
  return grads;
}

void scale_quaternion_gradient(RawVector& grad, double raw_quaternion_norm) {
  for (int k = 0; k < 4; ++k) grad[raw::kQuaternion + k] /= raw_quaternion_norm;
}

CoverageMaps coverage(const Scene& scene, const Camera& cam, const RegionMask& select,
                      const RasterSettings& settings) {
  require(select.size() == scene.size(), "coverage: region length does not match scene");
  CoverageMaps maps;
  maps.width = cam.width;
  maps.height = cam.height;
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  maps.selected.assign(n, 0.0);
  maps.total.assign(n, 0.0);
  for_each_contribution(scene, cam, settings,
                        [&](std::size_t pix, std::size_t gi, double alpha, double t) {
                          const double w = alpha * t;
                          maps.total[pix] += w;
                          if (select.test(gi)) maps.selected[pix] += w;
                        });
  return maps;
}

namespace {

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

double laplacian_response(const ImageBuffer& img, ImageBuffer& grad) {
  if (img.width < 3 || img.height < 3) {
    fail(ErrorCode::kInvalidArgument, "laplacian_response: image smaller than 3x3 kernel");
  }
  const int w = img.width, h = img.height;
  const double count = static_cast<double>(w) * h * 3;
  grad = ImageBuffer(w, h, 0.0);
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = clamp_index(x - 1, w), xr = clamp_index(x + 1, w);
      const int yu = clamp_index(y - 1, h), yd = clamp_index(y + 1, h);
      for (int c = 0; c < 3; ++c) {
        const double resp = img.at(xl, y, c) + img.at(xr, y, c) + img.at(x, yu, c) +
                            img.at(x, yd, c) - 4.0 * img.at(x, y, c);
        sum += resp * resp;
        const double d = 2.0 * resp / count;
        grad.at(xl, y, c) += d;
        grad.at(xr, y, c) += d;
        grad.at(x, yu, c) += d;
        grad.at(x, yd, c) += d;
        grad.at(x, y, c) -= 4.0 * d;
      }
    }
  }
  return sum / count;
}

double laplacian_response(const ImageBuffer& img) {
  ImageBuffer unused;
  return laplacian_response(img, unused);
}

}  // namespace progdf
