#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dmf/nn/param.hpp"

namespace dmf::nn {

// Differentiable primitives. Each layer is a value type owning its Params.
// `forward` is const and optionally records what `backward` needs into a
// caller-owned context, so inference on shared weights is reentrant.
// `backward` accumulates parameter gradients and returns the input gradient.
//
// Feature maps are [C][T][F]; time index t only ever reads frames <= t.

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

template <typename T>
MapR<T> as_matrix(Tensor<T>& x, std::size_t rows) {
  return MapR<T>(x.data(), static_cast<Eigen::Index>(rows),
                 static_cast<Eigen::Index>(x.size() / rows));
}
template <typename T>
CMapR<T> as_matrix(const Tensor<T>& x, std::size_t rows) {
  return CMapR<T>(x.data(), static_cast<Eigen::Index>(rows),
                  static_cast<Eigen::Index>(x.size() / rows));
}
template <typename T>
MapR<T> as_matrix(Param<T>& p, std::size_t rows) {
  return as_matrix(p.value, rows);
}

template <typename T>
void add_bias(Tensor<T>& y, const Param<T>& b) {
  const std::size_t per = y.stride0();
  for (std::size_t o = 0; o < y.dim(0); ++o) {
    T* row = y.slab(o);
    const T bo = b.value[o];
    for (std::size_t j = 0; j < per; ++j) row[j] += bo;
  }
}

template <typename T>
void accumulate_bias_grad(Param<T>& b, const Tensor<T>& dy) {
  const std::size_t per = dy.stride0();
  for (std::size_t o = 0; o < dy.dim(0); ++o) {
    const T* row = dy.slab(o);
    T s = 0;
    for (std::size_t j = 0; j < per; ++j) s += row[j];
    b.grad[o] += s;
  }
}

// ---------------------------------------------------------------------------
// 2-D convolution, kernel (2, kf), stride (1, 2), causal in time, no padding
// along frequency: F_out = (F_in - kf) / 2 + 1.
template <typename T>
class Conv2dDown {
 public:
  struct Ctx {
    Tensor<T> col;
    std::size_t frames = 0, in_bins = 0;
  };

  Conv2dDown() = default;
  Conv2dDown(std::size_t in_ch, std::size_t out_ch, std::size_t kf, Rng& rng)
      : in_(in_ch), out_(out_ch), kf_(kf),
        weight_("weight", {out_ch, in_ch * kKt * kf}), bias_("bias", {out_ch}) {
    init_fan_in(weight_, in_ch * kKt * kf, rng);
    init_fan_in(bias_, in_ch * kKt * kf, rng);
  }

  static std::size_t out_bins(std::size_t f, std::size_t kf) {
    if (f < kf) throw ShapeError("Conv2dDown: input narrower than kernel");
    return (f - kf) / 2 + 1;
  }

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 3 && x.dim(0) == in_,
                          "Conv2dDown: expected " + std::to_string(in_) + " input channels, got " +
                              x.shape_string());
    const std::size_t frames = x.dim(1), f_in = x.dim(2), f_out = out_bins(f_in, kf_);
    const std::size_t rows = in_ * kKt * kf_, cols = frames * f_out;
    Tensor<T> col({rows, cols});
    for (std::size_t i = 0; i < in_; ++i)
      for (std::size_t dt = 0; dt < kKt; ++dt)
        for (std::size_t k = 0; k < kf_; ++k) {
          T* dst = col.slab((i * kKt + dt) * kf_ + k);
          for (std::size_t t = 0; t < frames; ++t) {
            T* d = dst + t * f_out;
            if (t + dt < 1) {
              std::fill(d, d + f_out, T{0});
              continue;
            }
            const T* src = &x.at(i, t + dt - 1, 0) + k;
            for (std::size_t fo = 0; fo < f_out; ++fo) d[fo] = src[2 * fo];
          }
        }
    Tensor<T> y({out_, frames, f_out});
    as_matrix(y, out_).noalias() = as_matrix(weight_.value, out_) * as_matrix(col, rows);
    add_bias(y, bias_);
    if (ctx) {
      ctx->col = std::move(col);
      ctx->frames = frames;
      ctx->in_bins = f_in;
    }
    return y;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    const std::size_t rows = in_ * kKt * kf_;
    const std::size_t frames = ctx.frames, f_in = ctx.in_bins, f_out = out_bins(f_in, kf_);
    auto dym = as_matrix(dy, out_);
    as_matrix(weight_.grad, out_).noalias() += dym * as_matrix(ctx.col, rows).transpose();
    accumulate_bias_grad(bias_, dy);
    Tensor<T> dcol({rows, frames * f_out});
    as_matrix(dcol, rows).noalias() = as_matrix(weight_.value, out_).transpose() * dym;
    Tensor<T> dx({in_, frames, f_in});
    for (std::size_t i = 0; i < in_; ++i)
      for (std::size_t dt = 0; dt < kKt; ++dt)
        for (std::size_t k = 0; k < kf_; ++k) {
          const T* src = dcol.slab((i * kKt + dt) * kf_ + k);
          for (std::size_t t = dt == 0 ? 1 : 0; t < frames; ++t) {
            const T* s = src + t * f_out;
            T* d = &dx.at(i, t + dt - 1, 0) + k;
            for (std::size_t fo = 0; fo < f_out; ++fo) d[2 * fo] += s[fo];
          }
        }
    return dx;
  }

  template <class F>
  void visit(F&& f) {
    f(weight_);
    f(bias_);
  }
  template <class F>
  void visit(F&& f) const {
    f(weight_);
    f(bias_);
  }

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  std::size_t kernel_bins() const noexcept { return kf_; }

 private:
  static constexpr std::size_t kKt = 2;
  std::size_t in_ = 0, out_ = 0, kf_ = 0;
  Param<T> weight_, bias_;
};

// ---------------------------------------------------------------------------
// Transposed counterpart: kernel (2, kf), stride (1, 2), output
// F_out = (F_in - 1) * 2 + kf. Output frame t reads input frames t and t-1.
template <typename T>
class ConvTranspose2dUp {
 public:
  struct Ctx {
    Tensor<T> x;
  };

  ConvTranspose2dUp() = default;
  ConvTranspose2dUp(std::size_t in_ch, std::size_t out_ch, std::size_t kf, Rng& rng)
      : in_(in_ch), out_(out_ch), kf_(kf),
        weight_("weight", {out_ch * kKt * kf, in_ch}), bias_("bias", {out_ch}) {
    // fan-in seen by each output element of a stride-2 transposed conv
    init_fan_in(weight_, in_ch * kKt * kf, rng);
    init_fan_in(bias_, in_ch * kKt * kf, rng);
  }

  static std::size_t out_bins(std::size_t f, std::size_t kf) { return (f - 1) * 2 + kf; }

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 3 && x.dim(0) == in_,
                          "ConvTranspose2dUp: expected " + std::to_string(in_) +
                              " input channels, got " + x.shape_string());
    const std::size_t frames = x.dim(1), f_in = x.dim(2), f_out = out_bins(f_in, kf_);
    const std::size_t rows = out_ * kKt * kf_;
    Tensor<T> z({rows, frames * f_in});
    as_matrix(z, rows).noalias() = as_matrix(weight_.value, rows) * as_matrix(x, in_);
    Tensor<T> y({out_, frames, f_out});
    for (std::size_t o = 0; o < out_; ++o)
      for (std::size_t dt = 0; dt < kKt; ++dt)
        for (std::size_t k = 0; k < kf_; ++k) {
          const T* src = z.slab((o * kKt + dt) * kf_ + k);
          for (std::size_t t = 0; t + dt < frames; ++t) {
            const T* s = src + t * f_in;
            T* d = &y.at(o, t + dt, 0) + k;
            for (std::size_t f = 0; f < f_in; ++f) d[2 * f] += s[f];
          }
        }
    add_bias(y, bias_);
    if (ctx) ctx->x = x;
    return y;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    const std::size_t frames = ctx.x.dim(1), f_in = ctx.x.dim(2);
    const std::size_t rows = out_ * kKt * kf_;
    Tensor<T> dz({rows, frames * f_in});
    for (std::size_t o = 0; o < out_; ++o)
      for (std::size_t dt = 0; dt < kKt; ++dt)
        for (std::size_t k = 0; k < kf_; ++k) {
          T* dst = dz.slab((o * kKt + dt) * kf_ + k);
          for (std::size_t t = 0; t + dt < frames; ++t) {
            const T* s = &dy.at(o, t + dt, 0) + k;
            T* d = dst + t * f_in;
            for (std::size_t f = 0; f < f_in; ++f) d[f] = s[2 * f];
          }
        }
    accumulate_bias_grad(bias_, dy);
    auto dzm = as_matrix(dz, rows);
    as_matrix(weight_.grad, rows).noalias() += dzm * as_matrix(ctx.x, in_).transpose();
    Tensor<T> dx(ctx.x.shape());
    as_matrix(dx, in_).noalias() = as_matrix(weight_.value, rows).transpose() * dzm;
    return dx;
  }

  template <class F>
  void visit(F&& f) {
    f(weight_);
    f(bias_);
  }
  template <class F>
  void visit(F&& f) const {
    f(weight_);
    f(bias_);
  }

  std::size_t out_channels() const noexcept { return out_; }

 private:
  static constexpr std::size_t kKt = 2;
  std::size_t in_ = 0, out_ = 0, kf_ = 0;
  Param<T> weight_, bias_;
};

// ---------------------------------------------------------------------------
// Pointwise (1x1) convolution over the leading channel axis of any tensor.
template <typename T>
class Conv1x1 {
 public:
  struct Ctx {
    Tensor<T> x;
  };

  Conv1x1() = default;
  Conv1x1(std::size_t in_ch, std::size_t out_ch, Rng& rng)
      : in_(in_ch), out_(out_ch), weight_("weight", {out_ch, in_ch}), bias_("bias", {out_ch}) {
    init_fan_in(weight_, in_ch, rng);
    init_fan_in(bias_, in_ch, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() >= 1 && x.dim(0) == in_,
                          "Conv1x1: expected " + std::to_string(in_) + " channels, got " +
                              x.shape_string());
    auto shape = x.shape();
    shape[0] = out_;
    Tensor<T> y(shape);
    as_matrix(y, out_).noalias() = as_matrix(weight_.value, out_) * as_matrix(x, in_);
    add_bias(y, bias_);
    if (ctx) ctx->x = x;
    return y;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    auto dym = as_matrix(dy, out_);
    as_matrix(weight_.grad, out_).noalias() += dym * as_matrix(ctx.x, in_).transpose();
    accumulate_bias_grad(bias_, dy);
    Tensor<T> dx(ctx.x.shape());
    as_matrix(dx, in_).noalias() = as_matrix(weight_.value, out_).transpose() * dym;
    return dx;
  }

  template <class F>
  void visit(F&& f) {
    f(weight_);
    f(bias_);
  }
  template <class F>
  void visit(F&& f) const {
    f(weight_);
    f(bias_);
  }

  Param<T>& weight() noexcept { return weight_; }
  Param<T>& bias() noexcept { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Param<T> weight_, bias_;
};

// ---------------------------------------------------------------------------
// Dense causal dilated 1-D convolution over [C][T]:
//   y[o, t] = b[o] + sum_{i,k} W[o, i, k] x[i, t - (K-1-k) d]
template <typename T>
class DilatedCausalConv1d {
 public:
  struct Ctx {
    Tensor<T> col;
    std::size_t frames = 0;
  };

  DilatedCausalConv1d() = default;
  DilatedCausalConv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                      std::size_t dilation, Rng& rng)
      : in_(in_ch), out_(out_ch), k_(kernel), d_(dilation),
        weight_("weight", {out_ch, in_ch * kernel}), bias_("bias", {out_ch}) {
    if (kernel == 0 || dilation == 0) throw ConfigError("dilated conv: kernel and dilation >= 1");
    init_fan_in(weight_, in_ch * kernel, rng);
    init_fan_in(bias_, in_ch * kernel, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 2 && x.dim(0) == in_, "DilatedCausalConv1d: input shape");
    const std::size_t frames = x.dim(1), rows = in_ * k_;
    Tensor<T> col({rows, frames});
    for (std::size_t i = 0; i < in_; ++i)
      for (std::size_t k = 0; k < k_; ++k) {
        const std::size_t lag = (k_ - 1 - k) * d_;
        T* dst = col.slab(i * k_ + k);
        const T* src = x.slab(i);
        for (std::size_t t = lag; t < frames; ++t) dst[t] = src[t - lag];
      }
    Tensor<T> y({out_, frames});
    as_matrix(y, out_).noalias() = as_matrix(weight_.value, out_) * as_matrix(col, rows);
    add_bias(y, bias_);
    if (ctx) {
      ctx->col = std::move(col);
      ctx->frames = frames;
    }
    return y;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    const std::size_t rows = in_ * k_, frames = ctx.frames;
    auto dym = as_matrix(dy, out_);
    as_matrix(weight_.grad, out_).noalias() += dym * as_matrix(ctx.col, rows).transpose();
    accumulate_bias_grad(bias_, dy);
    Tensor<T> dcol({rows, frames});
    as_matrix(dcol, rows).noalias() = as_matrix(weight_.value, out_).transpose() * dym;
    Tensor<T> dx({in_, frames});
    for (std::size_t i = 0; i < in_; ++i)
      for (std::size_t k = 0; k < k_; ++k) {
        const std::size_t lag = (k_ - 1 - k) * d_;
        const T* src = dcol.slab(i * k_ + k);
        T* dst = dx.slab(i);
        for (std::size_t t = lag; t < frames; ++t) dst[t - lag] += src[t];
      }
    return dx;
  }

  template <class F>
  void visit(F&& f) {
    f(weight_);
    f(bias_);
  }
  template <class F>
  void visit(F&& f) const {
    f(weight_);
    f(bias_);
  }

  std::size_t kernel() const noexcept { return k_; }
  std::size_t dilation() const noexcept { return d_; }

 private:
  std::size_t in_ = 0, out_ = 0, k_ = 0, d_ = 1;
  Param<T> weight_, bias_;
};

// ---------------------------------------------------------------------------
// Per-frame normalisation. Statistics never cross frames, so the layer is
// causal. FreqNorm normalises each (channel, frame) row over frequency;
// ChannelNorm normalises each frame of a [C][T] map over channels. Both carry
// a per-channel affine (gain 1, shift 0 at init).
template <typename T>
class FreqNorm {
 public:
  struct Ctx {
    Tensor<T> xhat;
    std::vector<T> inv_std;
  };

  FreqNorm() = default;
  explicit FreqNorm(std::size_t channels)
      : c_(channels), gain_("gain", {channels}, T{1}), shift_("shift", {channels}) {}

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 3 && x.dim(0) == c_, "FreqNorm: input shape");
    const std::size_t frames = x.dim(1), bins = x.dim(2);
    Tensor<T> y(x.shape());
    Tensor<T> xhat;
    std::vector<T> inv;
    if (ctx) {
      xhat = Tensor<T>(x.shape());
      inv.resize(c_ * frames);
    }
    for (std::size_t c = 0; c < c_; ++c)
      for (std::size_t t = 0; t < frames; ++t) {
        const T* row = &x.at(c, t, 0);
        T mean = 0;
        for (std::size_t f = 0; f < bins; ++f) mean += row[f];
        mean /= static_cast<T>(bins);
        T var = 0;
        for (std::size_t f = 0; f < bins; ++f) var += (row[f] - mean) * (row[f] - mean);
        var /= static_cast<T>(bins);
        const T is = T{1} / std::sqrt(var + static_cast<T>(kEps));
        T* out = &y.at(c, t, 0);
        const T g = gain_.value[c], b = shift_.value[c];
        for (std::size_t f = 0; f < bins; ++f) {
          const T h = (row[f] - mean) * is;
          out[f] = g * h + b;
          if (ctx) xhat.at(c, t, f) = h;
        }
        if (ctx) inv[c * frames + t] = is;
      }
    if (ctx) {
      ctx->xhat = std::move(xhat);
      ctx->inv_std = std::move(inv);
    }
    return y;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    const std::size_t frames = dy.dim(1), bins = dy.dim(2);
    Tensor<T> dx(dy.shape());
    for (std::size_t c = 0; c < c_; ++c) {
      const T g = gain_.value[c];
      T dg = 0, db = 0;
      for (std::size_t t = 0; t < frames; ++t) {
        const T* d = &dy.at(c, t, 0);
        const T* h = &ctx.xhat.at(c, t, 0);
        T s1 = 0, s2 = 0;
        for (std::size_t f = 0; f < bins; ++f) {
          dg += d[f] * h[f];
          db += d[f];
          s1 += d[f];
          s2 += d[f] * h[f];
        }
        const T m1 = g * s1 / static_cast<T>(bins), m2 = g * s2 / static_cast<T>(bins);
        const T is = ctx.inv_std[c * frames + t];
        T* o = &dx.at(c, t, 0);
        for (std::size_t f = 0; f < bins; ++f) o[f] = is * (g * d[f] - m1 - h[f] * m2);
      }
      gain_.grad[c] += dg;
      shift_.grad[c] += db;
    }
    return dx;
  }

  template <class F>
  void visit(F&& f) {
    f(gain_);
    f(shift_);
  }
  template <class F>
  void visit(F&& f) const {
    f(gain_);
    f(shift_);
  }

  static constexpr double kEps = 1e-5;

 private:
  std::size_t c_ = 0;
  Param<T> gain_, shift_;
};

template <typename T>
class ChannelNorm {
 public:
  struct Ctx {
    Tensor<T> xhat;
    std::vector<T> inv_std;
  };

  ChannelNorm() = default;
  explicit ChannelNorm(std::size_t channels)
      : c_(channels), gain_("gain", {channels}, T{1}), shift_("shift", {channels}) {}

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.rank() == 2 && x.dim(0) == c_, "ChannelNorm: input shape");
    const std::size_t frames = x.dim(1);
    std::vector<T> mean(frames, T{0}), var(frames, T{0}), inv(frames);
    for (std::size_t c = 0; c < c_; ++c) {
      const T* r = x.slab(c);
      for (std::size_t t = 0; t < frames; ++t) mean[t] += r[t];
    }
    for (auto& m : mean) m /= static_cast<T>(c_);
    for (std::size_t c = 0; c < c_; ++c) {
      const T* r = x.slab(c);
      for (std::size_t t = 0; t < frames; ++t) var[t] += (r[t] - mean[t]) * (r[t] - mean[t]);
    }
    for (std::size_t t = 0; t < frames; ++t)
      inv[t] = T{1} / std::sqrt(var[t] / static_cast<T>(c_) + static_cast<T>(kEps));
    Tensor<T> y(x.shape());
    Tensor<T> xhat(x.shape());
    for (std::size_t c = 0; c < c_; ++c) {
      const T* r = x.slab(c);
      T* h = xhat.slab(c);
      T* o = y.slab(c);
      const T g = gain_.value[c], b = shift_.value[c];
      for (std::size_t t = 0; t < frames; ++t) {
        h[t] = (r[t] - mean[t]) * inv[t];
        o[t] = g * h[t] + b;
      }
    }
    if (ctx) {
      ctx->xhat = std::move(xhat);
      ctx->inv_std = std::move(inv);
    }
    return y;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    const std::size_t frames = dy.dim(1);
    std::vector<T> s1(frames, T{0}), s2(frames, T{0});
    for (std::size_t c = 0; c < c_; ++c) {
      const T g = gain_.value[c];
      const T* d = dy.slab(c);
      const T* h = ctx.xhat.slab(c);
      T dg = 0, db = 0;
      for (std::size_t t = 0; t < frames; ++t) {
        dg += d[t] * h[t];
        db += d[t];
        s1[t] += g * d[t];
        s2[t] += g * d[t] * h[t];
      }
      gain_.grad[c] += dg;
      shift_.grad[c] += db;
    }
    Tensor<T> dx(dy.shape());
    const T n = static_cast<T>(c_);
    for (std::size_t c = 0; c < c_; ++c) {
      const T g = gain_.value[c];
      const T* d = dy.slab(c);
      const T* h = ctx.xhat.slab(c);
      T* o = dx.slab(c);
      for (std::size_t t = 0; t < frames; ++t)
        o[t] = ctx.inv_std[t] * (g * d[t] - s1[t] / n - h[t] * s2[t] / n);
    }
    return dx;
  }

  template <class F>
  void visit(F&& f) {
    f(gain_);
    f(shift_);
  }
  template <class F>
  void visit(F&& f) const {
    f(gain_);
    f(shift_);
  }

  static constexpr double kEps = 1e-5;

 private:
  std::size_t c_ = 0;
  Param<T> gain_, shift_;
};

// ---------------------------------------------------------------------------
// Per-channel PReLU, slope initialised to 0.25.
template <typename T>
class PReLU {
 public:
  struct Ctx {
    Tensor<T> x;
  };

  PReLU() = default;
  explicit PReLU(std::size_t channels) : c_(channels), slope_("slope", {channels}, T(0.25)) {}

  Tensor<T> forward(const Tensor<T>& x, Ctx* ctx = nullptr) const {
    detail::require_shape(x.dim(0) == c_, "PReLU: channel count");
    Tensor<T> y(x.shape());
    const std::size_t per = x.stride0();
    for (std::size_t c = 0; c < c_; ++c) {
      const T a = slope_.value[c];
      const T* s = x.slab(c);
      T* d = y.slab(c);
      for (std::size_t j = 0; j < per; ++j) d[j] = s[j] > 0 ? s[j] : a * s[j];
    }
    if (ctx) ctx->x = x;
    return y;
  }

  Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape());
    const std::size_t per = dy.stride0();
    for (std::size_t c = 0; c < c_; ++c) {
      const T a = slope_.value[c];
      const T* x = ctx.x.slab(c);
      const T* d = dy.slab(c);
      T* o = dx.slab(c);
      T da = 0;
      for (std::size_t j = 0; j < per; ++j) {
        if (x[j] > 0) {
          o[j] = d[j];
        } else {
          o[j] = a * d[j];
          da += d[j] * x[j];
        }
      }
      slope_.grad[c] += da;
    }
    return dx;
  }

  template <class F>
  void visit(F&& f) {
    f(slope_);
  }
  template <class F>
  void visit(F&& f) const {
    f(slope_);
  }

 private:
  std::size_t c_ = 0;
  Param<T> slope_;
};

// Stateless pointwise nonlinearities; backward works from the saved output.
// The sigmoid is clamped to the open interval (0, 1) so saturated inputs
// never produce an exact 0 or 1 gain in finite precision.
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  constexpr T lo = std::numeric_limits<T>::min();
  constexpr T hi = T{1} - std::numeric_limits<T>::epsilon() / 2;
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    // split on sign so exp never overflows
    if (v >= 0) {
      y[i] = T{1} / (T{1} + std::exp(-v));
    } else {
      const T e = std::exp(v);
      y[i] = e / (T{1} + e);
    }
    y[i] = std::clamp(y[i], lo, hi);
  }
  return y;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (T{1} - y[i]);
  return dx;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

template <typename T>
Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (T{1} - y[i] * y[i]);
  return dx;
}

}  // namespace dmf::nn
