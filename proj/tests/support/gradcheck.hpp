#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dmf/core/tensor.hpp"
#include "dmf/nn/param.hpp"

namespace dmf::testing {

using TensorD = Tensor<double>;

inline TensorD random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = -1.0,
                             double hi = 1.0) {
  TensorD t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.vec()) v = u(rng);
  return t;
}

/// ||a - b|| / max(||a||, ||b||, floor). The floor absorbs difference noise on
/// gradients that vanish identically (a bias feeding a normalisation).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-6) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::max(std::sqrt(std::max(na, nb)), floor);
  return std::sqrt(d) / den;
}

/// Central-difference derivative of `f` w.r.t. every entry of `x`.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, std::vector<double>& x,
                                            double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = f();
    x[i] = keep - h;
    const double fm = f();
    x[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

struct GradReport {
  double worst = 0.0;
  std::string where;

  void add(double e, const std::string& name) {
    if (e >= worst) {
      worst = e;
      where = name;
    }
  }
};

/// Gradient check of a module y = m(x) through the scalar sum(w * y).
/// `forward(x)` evaluates without context; `analytic(x, w)` runs forward with
/// context and backward with dy = w, returning dx and filling parameter grads.
template <class Module>
GradReport check_module(Module& m, TensorD x, const std::function<TensorD(const TensorD&)>& forward,
                        const std::function<TensorD(const TensorD&, const TensorD&)>& analytic,
                        std::mt19937_64& rng) {
  const auto y0 = forward(x);
  const auto w = random_tensor(y0.shape(), rng);
  auto objective = [&] {
    const auto y = forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  };
  std::vector<nn::Param<double>*> params;
  m.visit([&](nn::Param<double>& p) { params.push_back(&p); });
  for (auto* p : params) p->zero_grad();
  const auto dx = analytic(x, w);

  // floor: 1e-5 of the largest analytic gradient norm in the module
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };
  double scale = norm(dx.vec());
  for (auto* p : params) scale = std::max(scale, norm(p->grad.vec()));
  const double floor = std::max(1e-6, 1e-5 * scale);

  GradReport r;
  r.add(relative_error(dx.vec(), numeric_gradient(objective, x.vec()), floor), "input");
  for (std::size_t k = 0; k < params.size(); ++k)
    r.add(relative_error(params[k]->grad.vec(), numeric_gradient(objective, params[k]->value.vec()),
                         floor),
          "param " + std::to_string(k) + " (" + params[k]->name + ")");
  return r;
}

}  // namespace dmf::testing
