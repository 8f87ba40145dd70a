#pragma once

#include <span>

#include "progdf/types.hpp"

namespace progdf {

struct EditLoss {
  double l1 = 0.0;
  double perceptual = 0.0;  // 1 - MSSIM
  double value = 0.0;       // l1 + lambda_p * perceptual
};

inline constexpr double kDefaultPerceptualWeight = 0.2;

// Mean absolute error plus lambda_p * (1 - MSSIM). MSSIM uses 7x7 Gaussian
// windows (sigma 1.5) over positions where the window fits; images smaller
// than the window contribute no perceptual term.
EditLoss edit_loss(const ImageBuffer& rendered, const ImageBuffer& target,
                   double lambda_perceptual = kDefaultPerceptualWeight);
// Same, with d(value)/d(rendered) written to `grad`.
EditLoss edit_loss(const ImageBuffer& rendered, const ImageBuffer& target,
                   double lambda_perceptual, ImageBuffer& grad);

double mean_abs_difference(const ImageBuffer& a, const ImageBuffer& b);
double mssim(const ImageBuffer& a, const ImageBuffer& b);

// -laplacian_response(img).
double sharpness_loss(const ImageBuffer& img);
double sharpness_loss(const ImageBuffer& img, ImageBuffer& grad);

struct ProgressiveSchedule {
  double alpha = 0.05;
  double beta = 1.1;
  double s = 50.0;

  // alpha * beta^(t / s)
  double weight(int t) const;
};

// weight(t) * sum_i |current_i - previous_i|_1 over raw parameters. The
// previous iterate is a constant.
double progressive_penalty(std::span<const RawVector> current,
                           std::span<const RawVector> previous, int t,
                           const ProgressiveSchedule& schedule);

}  // namespace progdf
