#pragma once

#include <optional>
#include <span>
#include <vector>

#include "progdf/types.hpp"

namespace progdf {

struct RasterSettings {
  double near_plane = 0.01;
  // Added to the projected 2x2 covariance (px^2).
  double cov_regularizer = 0.3;
  double alpha_max = 0.99;
  // Splats whose alpha at a pixel falls below this are skipped. 0 disables.
  double alpha_min = 1.0 / 255.0;
  // Half-extent of the screen-space box, in standard deviations. <= 0 means
  // every splat is evaluated at every pixel.
  double bbox_sigma = 3.0;

  // Settings with both the alpha skip and the bounding box disabled.
  static RasterSettings exhaustive() {
    RasterSettings s;
    s.alpha_min = 0.0;
    s.bbox_sigma = 0.0;
    return s;
  }
};

struct Splat2D {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
  double depth = 0.0;
  std::size_t source = 0;
};

std::optional<Splat2D> project_gaussian(const GaussianPrimitive& g, const Camera& cam,
                                        const RasterSettings& settings = {});

ImageBuffer render(const Scene& scene, const Camera& cam, const RasterSettings& settings = {});

// Gradients of a scalar loss with respect to each Gaussian's raw parameters
// (layout as RawVector). Raw parameters are taken to be deactivate(g); when
// the optimizer carries an unnormalized quaternion, divide the quaternion
// part by its norm (see scale_quaternion_gradient).
using RenderGradients = std::vector<RawVector>;

RenderGradients render_backward(const Scene& scene, const Camera& cam,
                                const ImageBuffer& d_image,
                                const RasterSettings& settings = {});

void scale_quaternion_gradient(RawVector& grad, double raw_quaternion_norm);

// Per-pixel compositing weights alpha_i * T_i, split into the weight carried
// by Gaussians selected in `select` and the total foreground weight.
struct CoverageMaps {
  int width = 0;
  int height = 0;
  std::vector<double> selected;
  std::vector<double> total;
};
CoverageMaps coverage(const Scene& scene, const Camera& cam, const RegionMask& select,
                      const RasterSettings& settings = {});

// Visits every (pixel, Gaussian) pair that passes the compositing cutoffs, in
// front-to-back order per pixel. `visit(pixel_index, gaussian_index, alpha,
// transmittance)`.
template <typename Visit>
void for_each_contribution(const Scene& scene, const Camera& cam,
                           const RasterSettings& settings, Visit&& visit);

// 3x3 Laplacian [[0,1,0],[1,-4,1],[0,1,0]] per channel with replicate
// padding; returns the mean squared response. Requires width, height >= 3.
double laplacian_response(const ImageBuffer& img);
// Same value, plus d(value)/d(pixels) written to `grad`.
double laplacian_response(const ImageBuffer& img, ImageBuffer& grad);

}  // namespace progdf

#include "progdf/detail/raster.hpp"
