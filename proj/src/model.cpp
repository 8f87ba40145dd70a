#include "progdf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "progdf/error.hpp"

namespace progdf {

namespace {

bool finite(const auto& v) { return v.allFinite(); }

bool group_is_zero(const GaussianOffset& o, int begin, int count) {
  for (int i = begin; i < begin + count; ++i) {
    if (o[i] != 0.0) return false;
  }
  return true;
}

}  // namespace

bool is_valid(const GaussianPrimitive& g) {
  if (!finite(g.position) || !finite(g.scale) || !finite(g.rotation) ||
      !finite(g.color) || !std::isfinite(g.opacity)) {
    return false;
  }
  if ((g.scale.array() <= 0.0).any()) return false;
  if (std::abs(g.rotation.norm() - 1.0) > 1e-6) return false;
  if (g.opacity < 0.0 || g.opacity > 1.0) return false;
  return (g.color.array() >= 0.0).all() && (g.color.array() <= 1.0).all();
}

bool GaussianOffset::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<std::size_t> RegionMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.push_back(i);
  }
  return out;
}

RegionMask RegionMask::from_indices(std::size_t n, const std::vector<std::size_t>& idx) {
  RegionMask m(n);
  for (std::size_t i : idx) {
    if (i >= n) fail(ErrorCode::kInvalidArgument, "region index " + std::to_string(i) +
                                                      " out of range for " + std::to_string(n) +
                                                      " Gaussians");
    m.set(i);
  }
  return m;
}

std::size_t Mask2D::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double intersection_over_union(const RegionMask& a, const RegionMask& b) {
  require(a.size() == b.size(), "region masks differ in length");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a.test(i) && b.test(i)) ? 1 : 0;
    uni += (a.test(i) || b.test(i)) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

bool Camera::is_valid() const {
  return width >= 1 && height >= 1 && fx > 0.0 && fy > 0.0 && rotation.allFinite() &&
         translation.allFinite() && std::isfinite(cx) && std::isfinite(cy);
}

Camera Camera::orbit(double azimuth_deg, double elevation_deg, double radius,
                     double fov_y_deg, int width, int height, const Vec3& target) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double az = azimuth_deg * kDeg;
  const double el = elevation_deg * kDeg;
  const Vec3 eye = target + radius * Vec3(std::cos(el) * std::sin(az), std::sin(el),
                                          -std::cos(el) * std::cos(az));
  const Vec3 forward = (target - eye).normalized();
  Vec3 up(0.0, 1.0, 0.0);
  if (std::abs(forward.dot(up)) > 0.999) up = Vec3(0.0, 0.0, 1.0);
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);

  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fy = 0.5 * height / std::tan(0.5 * fov_y_deg * kDeg);
  cam.fx = cam.fy;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -cam.rotation * eye;
  return cam;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  p = std::clamp(p, 1e-6, 1.0 - 1e-6);
  return std::log(p / (1.0 - p));
}

GaussianPrimitive activate(const RawParams& raw) {
  GaussianPrimitive g;
  for (int k = 0; k < 3; ++k) {
    g.position[k] = raw[raw::kPosition + k];
    g.scale[k] = std::exp(raw[raw::kLogScale + k]);
    g.color[k] = sigmoid(raw[raw::kColorLogit + k]);
  }
  Vec4 q(raw[raw::kQuaternion], raw[raw::kQuaternion + 1], raw[raw::kQuaternion + 2],
         raw[raw::kQuaternion + 3]);
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorCode::kNumeric, "degenerate rotation");
  g.rotation = q / n;
  g.opacity = sigmoid(raw[raw::kOpacityLogit]);
  return g;
}

RawParams deactivate(const GaussianPrimitive& g) {
  RawParams raw;
  for (int k = 0; k < 3; ++k) {
    raw[raw::kPosition + k] = g.position[k];
    raw[raw::kLogScale + k] = std::log(g.scale[k]);
    raw[raw::kColorLogit + k] = logit(g.color[k]);
  }
  for (int k = 0; k < 4; ++k) raw[raw::kQuaternion + k] = g.rotation[k];
  raw[raw::kOpacityLogit] = logit(g.opacity);
  return raw;
}

Mat3 rotation_matrix(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 covariance(const GaussianPrimitive& g) {
  const Mat3 m = rotation_matrix(g.rotation) * g.scale.asDiagonal();
  return m * m.transpose();
}

GaussianPrimitive apply_offset(const GaussianPrimitive& g, const GaussianOffset& offset) {
  GaussianPrimitive out = g;
  if (!group_is_zero(offset, raw::kPosition, 3)) {
    for (int k = 0; k < 3; ++k) out.position[k] = g.position[k] + offset[raw::kPosition + k];
  }
  if (!group_is_zero(offset, raw::kLogScale, 3)) {
    for (int k = 0; k < 3; ++k) {
      out.scale[k] = std::exp(std::log(g.scale[k]) + offset[raw::kLogScale + k]);
    }
  }
  if (!group_is_zero(offset, raw::kQuaternion, 4)) {
    Vec4 q = g.rotation;
    for (int k = 0; k < 4; ++k) q[k] += offset[raw::kQuaternion + k];
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorCode::kNumeric, "degenerate rotation");
    out.rotation = q / n;
  }
  if (offset[raw::kOpacityLogit] != 0.0) {
    out.opacity = sigmoid(logit(g.opacity) + offset[raw::kOpacityLogit]);
  }
  if (!group_is_zero(offset, raw::kColorLogit, 3)) {
    for (int k = 0; k < 3; ++k) {
      out.color[k] = sigmoid(logit(g.color[k]) + offset[raw::kColorLogit + k]);
    }
  }
  return out;
}

Scene apply_offsets(const Scene& scene, std::span<const GaussianOffset> offsets,
                    const RegionMask& mask) {
  if (offsets.size() != scene.size() || mask.size() != scene.size()) {
    fail(ErrorCode::kInvalidArgument,
         "apply_offsets: length mismatch (scene " + std::to_string(scene.size()) +
             ", offsets " + std::to_string(offsets.size()) + ", mask " +
             std::to_string(mask.size()) + ")");
  }
  Scene out = scene;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (mask.test(i)) out.gaussians[i] = apply_offset(scene.gaussians[i], offsets[i]);
  }
  return out;
}

}  // namespace progdf
