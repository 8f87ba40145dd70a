#pragma once

#include <string>
#include <vector>

#include "progdf/renderer.hpp"
#include "progdf/types.hpp"

namespace progdf {

// Per-Gaussian evidence gathered by casting every pixel ray of every masked
// view through the scene.
struct UnprojectionAccumulator {
  std::vector<double> w;      // sum of opacity * alpha * T * m(p)
  std::vector<double> n;      // rays passing the alpha cutoff, masked or not
  std::vector<double> total;  // sum of opacity * alpha * T, masked or not

  explicit UnprojectionAccumulator(std::size_t count = 0)
      : w(count, 0.0), n(count, 0.0), total(count, 0.0) {}
  std::size_t size() const { return w.size(); }
  void merge(const UnprojectionAccumulator& other);
};

UnprojectionAccumulator accumulate_mask_weights(const Scene& scene,
                                                const std::vector<Camera>& cameras,
                                                const std::vector<Mask2D>& masks,
                                                const RasterSettings& settings = {});

// How the accumulated weight is averaged before thresholding.
enum class MaskNormalization {
  // w / n: mean weight per ray hit.
  kCount,
  // w / total: share of the Gaussian's contribution that lands inside masks.
  kContribution,
};

const char* normalization_name(MaskNormalization mode);
MaskNormalization parse_normalization(const std::string& name);

// Selects Gaussians whose averaged weight reaches epsilon. Gaussians that no
// ray reached are never selected.
RegionMask threshold_region(const UnprojectionAccumulator& acc, double epsilon,
                            MaskNormalization mode = MaskNormalization::kCount);

}  // namespace progdf
