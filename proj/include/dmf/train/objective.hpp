#pragma once

#include <string>
#include <vector>

#include "dmf/data/batch.hpp"
#include "dmf/model/dmf_net.hpp"
#include "dmf/objectives/losses.hpp"

namespace dmf::train {

enum class StageName { lf_dn = 0, lf_dr, lf_sr, full_mid_high };

inline constexpr std::array<StageName, 4> kStageOrder{StageName::lf_dn, StageName::lf_dr,
                                                      StageName::lf_sr, StageName::full_mid_high};

inline std::string stage_name(StageName s) {
  switch (s) {
    case StageName::lf_dn: return "lf_dn";
    case StageName::lf_dr: return "lf_dr";
    case StageName::lf_sr: return "lf_sr";
    case StageName::full_mid_high: return "full_mid_high";
  }
  return "?";
}

inline StageName parse_stage(const std::string& s) {
  for (auto st : kStageOrder)
    if (stage_name(st) == s) return st;
  throw ConfigError("unknown stage '" + s + "' (expected lf_dn, lf_dr, lf_sr, full_mid_high)");
}

/// Stages that run on the 16 kHz front-end.
inline bool is_low_band_stage(StageName s) noexcept { return s != StageName::full_mid_high; }

inline std::vector<Subnet> stage_trainable(StageName s) {
  switch (s) {
    case StageName::lf_dn: return {Subnet::dn};
    case StageName::lf_dr: return {Subnet::dr};
    case StageName::lf_sr: return {Subnet::sr};
    case StageName::full_mid_high: return {Subnet::mf, Subnet::hf};
  }
  return {};
}

namespace detail {

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& dy) {
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = pre[i] > T{0} ? dy[i] : T{0};
  return dx;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> r(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
  return r;
}

template <typename T>
void scale(Tensor<T>& x, double s) {
  for (auto& v : x.vec()) v = static_cast<T>(v * s);
}

template <typename T>
Tensor<T> channel(const Tensor<T>& x, std::size_t c) {
  Tensor<T> r({x.dim(1), x.dim(2)});
  std::copy(x.slab(c), x.slab(c) + r.size(), r.data());
  return r;
}

}  // namespace detail

/// Loss of `stage` on one item; when `backprop` is set, gradients scaled by
/// `grad_scale` are accumulated into the stage's trainable sub-networks.
template <typename T>
double stage_loss(DmfNet<T>& model, StageName stage, const data::SpectralItem& item,
                  bool backprop = false, double grad_scale = 1.0) {
  using namespace detail;
  const auto& cfg = model.config();
  const auto rule = cfg.model.tap_offsets;

  if (stage == StageName::full_mid_high) {
    const auto mags = frontend::split_bands(item.noisy.mag, cfg.bands);
    const auto phases = frontend::split_bands(item.noisy.phase, cfg.bands);
    const auto target = frontend::split_bands(item.clean.mag, cfg.bands);
    const auto lf = model.lf_forward({mags.low, phases.low});
    const auto lf_mag = lf.output_mag();
    const auto mid_in = tensor_cast<T>(mags.mid), high_in = tensor_cast<T>(mags.high);
    typename nn::GainNet<T>::Ctx cm, ch;
    const auto gm = model.mf.forward(stack_planes<T>({&mid_in, &lf_mag}), backprop ? &cm : nullptr);
    const auto est_mid = mul(mid_in, gm);
    const auto gh =
        model.hf.forward(stack_planes<T>({&high_in, &lf_mag, &est_mid}), backprop ? &ch : nullptr);
    const auto est_high = mul(high_in, gh);
    auto lg = objectives::loss_full(est_mid, tensor_cast<T>(target.mid), est_high,
                                    tensor_cast<T>(target.high), cfg.loss.alpha);
    if (backprop) {
      scale(lg.d_mid, grad_scale);
      scale(lg.d_high, grad_scale);
      const auto dx_h = model.hf.backward(ch, mul(lg.d_high, high_in));
      auto d_mid = lg.d_mid;
      d_mid += channel(dx_h, 2);
      model.mf.backward(cm, mul(d_mid, mid_in));
    }
    return lg.value;
  }

  const auto x = tensor_cast<T>(item.noisy.mag);
  if (stage == StageName::lf_dn) {
    typename nn::FilterMaskNet<T>::Ctx ctx;
    const auto mask = model.dn.forward(stack_planes<T>({&x}), backprop ? &ctx : nullptr);
    const auto raw = nn::apply_multiframe_filter(mask, x, rule);
    auto lg = objectives::loss_dn(relu(raw), tensor_cast<T>(item.reverberant.mag));
    if (backprop) {
      scale(lg.d_est, grad_scale);
      auto g = nn::multiframe_filter_backward(mask, x, relu_backward(raw, lg.d_est), rule);
      model.dn.backward(ctx, g.d_mask);
    }
    return lg.value;
  }

  const auto dn_mag = filter_magnitude(model.dn.forward(stack_planes<T>({&x})), x, rule);
  if (stage == StageName::lf_dr) {
    typename nn::FilterMaskNet<T>::Ctx ctx;
    const auto mask = model.dr.forward(stack_planes<T>({&dn_mag, &x}), backprop ? &ctx : nullptr);
    const auto raw = nn::apply_multiframe_filter(mask, dn_mag, rule);
    auto lg = objectives::loss_dr(relu(raw), tensor_cast<T>(item.clean.mag));
    if (backprop) {
      scale(lg.d_est, grad_scale);
      auto g = nn::multiframe_filter_backward(mask, dn_mag, relu_backward(raw, lg.d_est), rule);
      model.dr.backward(ctx, g.d_mask);
    }
    return lg.value;
  }

  // lf_sr
  if (!model.has_sr()) throw ConfigError("stage lf_sr requested but the SR sub-network is disabled");
  LfOutputs<T> o;
  o.noisy_mag = x;
  o.phase = item.noisy.phase;
  o.dn_mag = dn_mag;
  o.dr_mag = filter_magnitude(model.dr.forward(stack_planes<T>({&dn_mag, &x})), dn_mag, rule);
  typename nn::RefineNet<T>::Ctx ctx;
  const auto r = model.sr.forward(model.sr_input(o), backprop ? &ctx : nullptr);
  auto [dr_re, dr_im] = polar_planes(o.dr_mag, o.phase);
  dr_re += r.re;
  dr_im += r.im;
  const auto tgt = item.clean.coupled();
  auto lg = objectives::loss_sr(dr_re, dr_im, tensor_cast<T>(tgt.real()), tensor_cast<T>(tgt.imag()),
                                cfg.loss.mu);
  if (backprop) {
    scale(lg.d_re, grad_scale);
    scale(lg.d_im, grad_scale);
    model.sr.backward(ctx, lg.d_re, lg.d_im);
  }
  return lg.value;
}

/// Mean stage loss over a set of items (no gradients).
template <typename T>
double mean_stage_loss(DmfNet<T>& model, StageName stage, const std::vector<data::SpectralItem>& items) {
  if (items.empty()) return 0.0;
  double s = 0.0;
  for (const auto& it : items) s += stage_loss(model, stage, it, false);
  return s / static_cast<double>(items.size());
}

}  // namespace dmf::train
