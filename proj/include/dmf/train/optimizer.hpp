#pragma once

#include <cmath>
#include <vector>

#include "dmf/model/config.hpp"
#include "dmf/nn/param.hpp"

namespace dmf::train {

template <typename T>
double global_grad_norm(const nn::ParamList<T>& ps) {
  double s = 0.0;
  for (const auto* p : ps)
    for (auto g : p->grad.vec()) s += static_cast<double>(g) * static_cast<double>(g);
  return std::sqrt(s);
}

/// Scale all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(const nn::ParamList<T>& ps, double max_norm) {
  const double norm = global_grad_norm(ps);
  if (max_norm > 0.0 && norm > max_norm && std::isfinite(norm)) {
    const auto s = static_cast<T>(max_norm / norm);
    for (auto* p : ps)
      for (auto& g : p->grad.vec()) g *= s;
  }
  return norm;
}

/// Adam with bias correction.
template <typename T>
class Adam {
 public:
  Adam(nn::ParamList<T> params, const OptimizerConfig& cfg, double lr)
      : params_(std::move(params)), cfg_(cfg), lr_(lr) {
    cfg_.validate();
    for (const auto* p : params_) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& w = params_[k]->value.vec();
      const auto& g = params_[k]->grad.vec();
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g[i];
        m[i] = b1 * m[i] + (1.0 - b1) * gi;
        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
        const double mh = m[i] / c1, vh = v[i] / c2;
        w[i] = static_cast<T>(static_cast<double>(w[i]) - lr_ * mh / (std::sqrt(vh) + cfg_.epsilon));
      }
    }
  }

  const nn::ParamList<T>& params() const noexcept { return params_; }
  double lr() const noexcept { return lr_; }
  std::size_t steps() const noexcept { return t_; }

 private:
  nn::ParamList<T> params_;
  OptimizerConfig cfg_;
  double lr_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace dmf::train
