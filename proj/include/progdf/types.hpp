#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace progdf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// One anisotropic Gaussian. Rotation is a unit quaternion stored (w, x, y, z).
struct GaussianPrimitive {
  Vec3 position = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
  double opacity = 1.0;
  Vec3 color = Vec3::Zero();

  bool operator==(const GaussianPrimitive&) const = default;
};

// Checks the value invariants (unit rotation, positive scale, opacity and
// color in [0, 1], everything finite).
bool is_valid(const GaussianPrimitive& g);

struct Scene {
  std::vector<GaussianPrimitive> gaussians;
  Vec3 background = Vec3::Zero();

  std::size_t size() const { return gaussians.size(); }
  bool operator==(const Scene&) const = default;
};

// Flat layout of the unconstrained optimization parameters of one Gaussian.
// Offsets and gradients share the same layout.
namespace raw {
inline constexpr int kPosition = 0;
inline constexpr int kLogScale = 3;
inline constexpr int kQuaternion = 6;
inline constexpr int kOpacityLogit = 10;
inline constexpr int kColorLogit = 11;
inline constexpr int kDim = 14;
}  // namespace raw

using RawVector = std::array<double, raw::kDim>;

struct RawParams {
  RawVector values{};

  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
};

// Additive delta in raw space: (dposition, dlog-scale, drotation,
// dopacity-logit, dcolor-logit).
struct GaussianOffset {
  RawVector values{};

  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
  bool is_zero() const;
};

// Per-Gaussian selection bits.
struct RegionMask {
  std::vector<std::uint8_t> bits;

  RegionMask() = default;
  explicit RegionMask(std::size_t n, bool value = false)
      : bits(n, value ? 1 : 0) {}

  std::size_t size() const { return bits.size(); }
  bool test(std::size_t i) const { return bits[i] != 0; }
  void set(std::size_t i, bool v = true) { bits[i] = v ? 1 : 0; }
  std::size_t count() const;
  std::vector<std::size_t> indices() const;
  static RegionMask from_indices(std::size_t n, const std::vector<std::size_t>& idx);

  bool operator==(const RegionMask&) const = default;
};

double intersection_over_union(const RegionMask& a, const RegionMask& b);

// Pinhole camera, OpenCV convention (x right, y down, z forward). Pixel (x, y)
// has its center at (x + 0.5, y + 0.5).
struct Camera {
  int width = 1;
  int height = 1;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  Mat3 rotation = Mat3::Identity();  // world to camera
  Vec3 translation = Vec3::Zero();

  bool is_valid() const;
  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 eye() const { return -rotation.transpose() * translation; }

  // Camera on a sphere around `target` looking at it. Angles in degrees;
  // `fov_y_deg` is the vertical field of view.
  static Camera orbit(double azimuth_deg, double elevation_deg, double radius,
                      double fov_y_deg, int width, int height,
                      const Vec3& target = Vec3::Zero());
};

// Row-major RGB image with real channels.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * 3 + c;
  }
  double& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  double at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  bool same_shape(const ImageBuffer& o) const {
    return width == o.width && height == o.height;
  }
};

// Per-pixel boolean mask for one view.
struct Mask2D {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask2D() = default;
  Mask2D(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool test(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
  bool operator==(const Mask2D&) const = default;
};

}  // namespace progdf
