#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace coupons {

struct AdamParameters {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moments, written for gradient ascent. Entries with
// active[i] == false are never touched.
template <std::size_t N>
class Adam {
 public:
  explicit Adam(AdamParameters params) : params_(params) {}

  void ascend(std::array<double, N>& x, const std::array<double, N>& grad,
              const std::array<bool, N>& active) {
    ++step_;
    const double c1 = 1.0 - std::pow(params_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(params_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < N; ++i) {
      if (!active[i]) continue;
      m_[i] = params_.beta1 * m_[i] + (1.0 - params_.beta1) * grad[i];
      v_[i] = params_.beta2 * v_[i] + (1.0 - params_.beta2) * grad[i] * grad[i];
      x[i] += params_.alpha * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + params_.epsilon);
    }
  }

  long step() const { return step_; }

 private:
  AdamParameters params_;
  std::array<double, N> m_{};
  std::array<double, N> v_{};
  long step_ = 0;
};

}  // namespace coupons
