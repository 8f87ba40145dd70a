#pragma once

#include <span>

#include "progdf/types.hpp"

namespace progdf {

double sigmoid(double x);
// Inverse of sigmoid; the argument is clamped to [1e-6, 1 - 1e-6] first.
double logit(double p);

// exp / normalize / sigmoid. Throws "degenerate rotation" on a zero-norm
// quaternion.
GaussianPrimitive activate(const RawParams& raw);
RawParams deactivate(const GaussianPrimitive& g);

// Rotation matrix of a unit quaternion (w, x, y, z).
Mat3 rotation_matrix(const Vec4& q);
// Sigma = R S S^T R^T.
Mat3 covariance(const GaussianPrimitive& g);

// Adds `offset` to the raw parameters of `g` and re-activates. Parameter
// groups whose delta is exactly zero keep their original activated value,
// so a zero offset is the identity.
GaussianPrimitive apply_offset(const GaussianPrimitive& g, const GaussianOffset& offset);

// Offsets are applied only where mask is set; other Gaussians are copied
// untouched.
Scene apply_offsets(const Scene& scene, std::span<const GaussianOffset> offsets,
                    const RegionMask& mask);

}  // namespace progdf
