#pragma once

#include <cmath>

#include "dmf/core/tensor.hpp"
#include "dmf/frontend/spectrogram.hpp"

namespace dmf::objectives {

/// Loss value with the gradient w.r.t. each estimate.
template <typename T>
struct LossGrad {
  double value = 0.0;
  Tensor<T> d_est;
};

template <typename T>
struct ComplexLossGrad {
  double value = 0.0;
  Tensor<T> d_re;
  Tensor<T> d_im;
};

template <typename T>
struct BandLossGrad {
  double value = 0.0;
  double mid = 0.0;
  double high = 0.0;
  Tensor<T> d_mid;
  Tensor<T> d_high;
};

namespace detail {
template <typename A, typename B>
void check_pair(const Tensor<A>& est, const Tensor<B>& tgt, const char* what) {
  dmf::detail::require_shape(est.shape() == tgt.shape(),
                             std::string(what) + ": estimate " + est.shape_string() +
                                 " vs target " + tgt.shape_string());
  if (est.size() == 0) throw ShapeError(std::string(what) + ": empty input");
}
}  // namespace detail

/// Mean squared error over all elements.
template <typename T>
double mse(const Tensor<T>& est, const Tensor<T>& tgt) {
  detail::check_pair(est, tgt, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double d = static_cast<double>(est[i]) - static_cast<double>(tgt[i]);
    s += d * d;
  }
  return s / static_cast<double>(est.size());
}

template <typename T>
LossGrad<T> mse_grad(const Tensor<T>& est, const Tensor<T>& tgt, double weight = 1.0) {
  detail::check_pair(est, tgt, "mse");
  LossGrad<T> r{0.0, Tensor<T>(est.shape())};
  const double n = static_cast<double>(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double d = static_cast<double>(est[i]) - static_cast<double>(tgt[i]);
    r.value += d * d;
    r.d_est[i] = static_cast<T>(weight * 2.0 * d / n);
  }
  r.value /= n;
  return r;
}

/// Denoising loss on compressed magnitudes.
template <typename T>
LossGrad<T> loss_dn(const Tensor<T>& est_mag, const Tensor<T>& tgt_mag) {
  return mse_grad(est_mag, tgt_mag);
}

/// Dereverberation loss on compressed magnitudes.
template <typename T>
LossGrad<T> loss_dr(const Tensor<T>& est_mag, const Tensor<T>& tgt_mag) {
  return mse_grad(est_mag, tgt_mag);
}

/// Refinement loss: mu * RI + (1 - mu) * Mag, where RI is the mean over the
/// stacked real/imag error, (sum dr^2 + sum di^2) / (2N), and Mag is the MSE
/// of the magnitudes.
template <typename T>
ComplexLossGrad<T> loss_sr(const Tensor<T>& est_re, const Tensor<T>& est_im,
                           const Tensor<T>& tgt_re, const Tensor<T>& tgt_im, double mu) {
  detail::check_pair(est_re, tgt_re, "loss_sr");
  detail::check_pair(est_im, tgt_im, "loss_sr");
  detail::check_pair(est_re, est_im, "loss_sr");
  if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("loss_sr: mu must lie in [0, 1]");
  const std::size_t n = est_re.size();
  const double nn = static_cast<double>(n);
  ComplexLossGrad<T> r{0.0, Tensor<T>(est_re.shape()), Tensor<T>(est_re.shape())};
  double ri = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double er = est_re[i], ei = est_im[i], tr = tgt_re[i], ti = tgt_im[i];
    const double dr = er - tr, di = ei - ti;
    ri += dr * dr + di * di;
    const double me = std::hypot(er, ei), mt = std::hypot(tr, ti), dm = me - mt;
    mag += dm * dm;
    // d|e|/de is e/|e|; zero at the origin (subgradient)
    const double gm = me > 0.0 ? (1.0 - mu) * 2.0 * dm / (nn * me) : 0.0;
    r.d_re[i] = static_cast<T>(mu * dr / nn + gm * er);
    r.d_im[i] = static_cast<T>(mu * di / nn + gm * ei);
  }
  r.value = mu * ri / (2.0 * nn) + (1.0 - mu) * mag / nn;
  return r;
}

/// Same loss on complex spectrograms (value only).
inline double loss_sr(const frontend::ComplexSpectrogram& est, const frontend::ComplexSpectrogram& tgt,
                      double mu) {
  return loss_sr<double>(est.real(), est.imag(), tgt.real(), tgt.imag(), mu).value;
}

/// Joint mid/high loss: alpha * MSE_mid + (1 - alpha) * MSE_high.
template <typename T>
BandLossGrad<T> loss_full(const Tensor<T>& est_mid, const Tensor<T>& tgt_mid,
                          const Tensor<T>& est_high, const Tensor<T>& tgt_high, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("loss_full: alpha must lie in [0, 1]");
  auto m = mse_grad(est_mid, tgt_mid, alpha);
  auto h = mse_grad(est_high, tgt_high, 1.0 - alpha);
  return {alpha * m.value + (1.0 - alpha) * h.value, m.value, h.value, std::move(m.d_est),
          std::move(h.d_est)};
}

}  // namespace dmf::objectives
