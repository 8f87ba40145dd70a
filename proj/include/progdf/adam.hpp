#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "progdf/error.hpp"

namespace progdf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moments are kept in `Scalar`; the caller drives
// each step with begin_step() followed by direction() per coordinate, or uses
// update() for a plain step.
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t n, AdamConfig cfg = {}) : cfg_(cfg), m_(n, 0), v_(n, 0) {}

  std::size_t size() const { return m_.size(); }
  long steps() const { return t_; }

  void begin_step() {
    ++t_;
    c1_ = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    c2_ = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  }

  // Folds gradient g into the moments of coordinate i and returns the
  // normalized step direction m_hat / (sqrt(v_hat) + eps).
  double direction(std::size_t i, double g) {
    const double m = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    const double v = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    m_[i] = static_cast<Scalar>(m);
    v_[i] = static_cast<Scalar>(v);
    return (m / c1_) / (std::sqrt(v / c2_) + cfg_.epsilon);
  }

  // params -= lr * direction, over every coordinate.
  void update(std::span<Scalar> params, std::span<const Scalar> grads, double lr) {
    require(params.size() == m_.size() && grads.size() == m_.size(), "Adam: size mismatch");
    begin_step();
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] = static_cast<Scalar>(params[i] - lr * direction(i, grads[i]));
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<Scalar> m_, v_;
  long t_ = 0;
  double c1_ = 1.0, c2_ = 1.0;
};

}  // namespace progdf
