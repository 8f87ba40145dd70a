#include "progdf/losses.hpp"

#include <array>
#include <cmath>

#include "progdf/error.hpp"
#include "progdf/renderer.hpp"

namespace progdf {

namespace {

constexpr int kWindow = 7;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

void check_shapes(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b) || a.pixels.size() != b.pixels.size()) {
    fail(ErrorCode::kInvalidArgument, "image dimensions differ (" + std::to_string(a.width) + "x" +
                                          std::to_string(a.height) + " vs " +
                                          std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
  }
}

// Mean SSIM over channels and valid window positions; optionally the
// gradient of the mean with respect to `a`.
double mssim_impl(const ImageBuffer& a, const ImageBuffer& b, ImageBuffer* grad) {
  const int w = a.width, h = a.height;
  const int ow = w - kWindow + 1, oh = h - kWindow + 1;
  if (ow < 1 || oh < 1) return 1.0;
  const auto win = gaussian_window();
  const double norm = 1.0 / (static_cast<double>(ow) * oh * 3);

  // Per output position: dS/dmu_a, dS/dE[a^2], dS/dE[ab].
  std::vector<double> g_mu, g_aa, g_ab;
  if (grad) {
    const std::size_t n = static_cast<std::size_t>(ow) * oh;
    g_mu.assign(n, 0.0);
    g_aa.assign(n, 0.0);
    g_ab.assign(n, 0.0);
  }

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double mu_a = 0, mu_b = 0, e_aa = 0, e_bb = 0, e_ab = 0;
        for (int j = 0; j < kWindow; ++j) {
          for (int i = 0; i < kWindow; ++i) {
            const double wt = win[j] * win[i];
            const double va = a.at(ox + i, oy + j, c), vb = b.at(ox + i, oy + j, c);
            mu_a += wt * va;
            mu_b += wt * vb;
            e_aa += wt * va * va;
            e_bb += wt * vb * vb;
            e_ab += wt * va * vb;
          }
        }
        const double var_a = e_aa - mu_a * mu_a;
        const double var_b = e_bb - mu_b * mu_b;
        const double cov = e_ab - mu_a * mu_b;
        const double a1 = 2 * mu_a * mu_b + kSsimC1, a2 = 2 * cov + kSsimC2;
        const double b1 = mu_a * mu_a + mu_b * mu_b + kSsimC1, b2 = var_a + var_b + kSsimC2;
        const double s = (a1 * a2) / (b1 * b2);
        total += s;
        if (grad) {
          const std::size_t k = static_cast<std::size_t>(oy) * ow + ox;
          g_mu[k] = (2 * mu_b * a2 - 2 * mu_b * a1) / (b1 * b2) - s * (2 * mu_a / b1 - 2 * mu_a / b2);
          g_aa[k] = -s / b2;
          g_ab[k] = 2 * a1 / (b1 * b2);
        }
      }
    }
    if (grad) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const std::size_t k = static_cast<std::size_t>(oy) * ow + ox;
          for (int j = 0; j < kWindow; ++j) {
            for (int i = 0; i < kWindow; ++i) {
              const double wt = win[j] * win[i] * norm;
              const double va = a.at(ox + i, oy + j, c), vb = b.at(ox + i, oy + j, c);
              grad->at(ox + i, oy + j, c) += wt * (g_mu[k] + 2 * va * g_aa[k] + vb * g_ab[k]);
            }
          }
        }
      }
    }
  }
  return total * norm;
}

}  // namespace

double mean_abs_difference(const ImageBuffer& a, const ImageBuffer& b) {
  check_shapes(a, b);
  if (a.pixels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) sum += std::abs(a.pixels[i] - b.pixels[i]);
  return sum / static_cast<double>(a.pixels.size());
}

double mssim(const ImageBuffer& a, const ImageBuffer& b) {
  check_shapes(a, b);
  return mssim_impl(a, b, nullptr);
}

EditLoss edit_loss(const ImageBuffer& rendered, const ImageBuffer& target,
                   double lambda_perceptual, ImageBuffer& grad) {
  check_shapes(rendered, target);
  grad = ImageBuffer(rendered.width, rendered.height, 0.0);
  EditLoss out;
  const double n = static_cast<double>(rendered.pixels.size());
  if (n == 0) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < rendered.pixels.size(); ++i) {
    const double d = rendered.pixels[i] - target.pixels[i];
    sum += std::abs(d);
    grad.pixels[i] = d > 0 ? 1.0 / n : (d < 0 ? -1.0 / n : 0.0);
  }
  out.l1 = sum / n;
  if (lambda_perceptual != 0.0) {
    ImageBuffer g_ssim(rendered.width, rendered.height, 0.0);
    out.perceptual = 1.0 - mssim_impl(rendered, target, &g_ssim);
    for (std::size_t i = 0; i < grad.pixels.size(); ++i) {
      grad.pixels[i] -= lambda_perceptual * g_ssim.pixels[i];
    }
  } else {
    out.perceptual = 1.0 - mssim_impl(rendered, target, nullptr);
  }
  out.value = out.l1 + lambda_perceptual * out.perceptual;
  return out;
}

EditLoss edit_loss(const ImageBuffer& rendered, const ImageBuffer& target,
                   double lambda_perceptual) {
  check_shapes(rendered, target);
  EditLoss out;
  out.l1 = mean_abs_difference(rendered, target);
  out.perceptual = 1.0 - mssim_impl(rendered, target, nullptr);
  out.value = out.l1 + lambda_perceptual * out.perceptual;
  return out;
}

double sharpness_loss(const ImageBuffer& img) { return -laplacian_response(img); }

double sharpness_loss(const ImageBuffer& img, ImageBuffer& grad) {
  const double v = laplacian_response(img, grad);
  for (double& g : grad.pixels) g = -g;
  return -v;
}

double ProgressiveSchedule::weight(int t) const {
  return alpha * std::pow(beta, static_cast<double>(t) / s);
}

double progressive_penalty(std::span<const RawVector> current,
                           std::span<const RawVector> previous, int t,
                           const ProgressiveSchedule& schedule) {
  if (current.size() != previous.size()) {
    fail(ErrorCode::kInvalidArgument, "progressive_penalty: parameter sets differ in size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < current.size(); ++i) {
    for (int k = 0; k < raw::kDim; ++k) sum += std::abs(current[i][k] - previous[i][k]);
  }
  return schedule.weight(t) * sum;
}

}  // namespace progdf
