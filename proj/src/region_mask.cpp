#include "progdf/region_mask.hpp"

#include <string>

#include "progdf/error.hpp"

namespace progdf {

void UnprojectionAccumulator::merge(const UnprojectionAccumulator& other) {
  require(other.size() == size(), "accumulator merge: size mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    w[i] += other.w[i];
    n[i] += other.n[i];
    total[i] += other.total[i];
  }
}

UnprojectionAccumulator accumulate_mask_weights(const Scene& scene,
                                                const std::vector<Camera>& cameras,
                                                const std::vector<Mask2D>& masks,
                                                const RasterSettings& settings) {
  if (cameras.size() != masks.size()) {
    fail(ErrorCode::kInvalidArgument, "accumulate_mask_weights: " + std::to_string(masks.size()) +
                                          " masks for " + std::to_string(cameras.size()) + " cameras");
  }
  UnprojectionAccumulator acc(scene.size());
  for (std::size_t v = 0; v < cameras.size(); ++v) {
    const Camera& cam = cameras[v];
    const Mask2D& mask = masks[v];
    if (mask.width != cam.width || mask.height != cam.height) {
      fail(ErrorCode::kInvalidArgument, "accumulate_mask_weights: mask " + std::to_string(v) +
                                            " does not match its camera");
    }
    for_each_contribution(scene, cam, settings,
                          [&](std::size_t pix, std::size_t gi, double alpha, double t) {
                            const double c = scene.gaussians[gi].opacity * alpha * t;
                            acc.n[gi] += 1.0;
                            acc.total[gi] += c;
                            if (mask.bits[pix]) acc.w[gi] += c;
                          });
  }
  return acc;
}

const char* normalization_name(MaskNormalization mode) {
  return mode == MaskNormalization::kCount ? "count" : "contribution";
}

MaskNormalization parse_normalization(const std::string& name) {
  if (name == "count") return MaskNormalization::kCount;
  if (name == "contribution") return MaskNormalization::kContribution;
  fail(ErrorCode::kInvalidArgument, "unknown mask normalization '" + name + "'");
}

RegionMask threshold_region(const UnprojectionAccumulator& acc, double epsilon,
                            MaskNormalization mode) {
  require(epsilon > 0.0 && epsilon <= 1.0, "threshold_region: epsilon must be in (0, 1]");
  RegionMask out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc.n[i] <= 0.0) continue;
    const double denom = mode == MaskNormalization::kCount ? acc.n[i] : acc.total[i];
    if (denom > 0.0 && acc.w[i] / denom >= epsilon) out.set(i);
  }
  return out;
}

}  // namespace progdf
