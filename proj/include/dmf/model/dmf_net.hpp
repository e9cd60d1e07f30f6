#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "dmf/frontend/bands.hpp"
#include "dmf/frontend/compression.hpp"
#include "dmf/frontend/stft.hpp"
#include "dmf/model/config.hpp"
#include "dmf/nn/multiframe.hpp"
#include "dmf/nn/subnets.hpp"

namespace dmf {

inline constexpr std::string_view kModelVersion = "dmf-net 1.0";

enum class Subnet : std::size_t { dn = 0, dr, sr, mf, hf };
inline constexpr std::array<Subnet, 5> kAllSubnets{Subnet::dn, Subnet::dr, Subnet::sr, Subnet::mf,
                                                   Subnet::hf};

inline std::string_view subnet_name(Subnet s) {
  static constexpr std::array<std::string_view, 5> names{"dn", "dr", "sr", "mf", "hf"};
  return names[static_cast<std::size_t>(s)];
}

inline Subnet parse_subnet(std::string_view name) {
  for (auto s : kAllSubnets)
    if (subnet_name(s) == name) return s;
  throw ConfigError("unknown sub-network '" + std::string(name) + "' (expected dn, dr, sr, mf, hf)");
}

/// Rectified multi-frame filtering of a compressed magnitude.
template <typename T>
Tensor<T> filter_magnitude(const Tensor<T>& mask, const Tensor<T>& mag, nn::TapOffsets rule) {
  auto out = nn::apply_multiframe_filter(mask, mag, rule);
  for (auto& v : out.vec()) v = v > T{0} ? v : T{0};
  return out;
}

/// Stack [T][F] planes as channels of a [C][T][F] network input.
template <typename T>
Tensor<T> stack_planes(std::initializer_list<const Tensor<T>*> planes) {
  const auto& first = **planes.begin();
  const std::size_t frames = first.dim(0), bins = first.dim(1);
  Tensor<T> x({planes.size(), frames, bins});
  std::size_t c = 0;
  for (const auto* p : planes) {
    detail::require_shape(p->rank() == 2 && p->dim(0) == frames && p->dim(1) == bins,
                          "stack_planes: plane " + p->shape_string() + " vs " + first.shape_string());
    std::copy(p->data(), p->data() + p->size(), x.slab(c++));
  }
  return x;
}

/// Real and imaginary parts of mag * exp(j phase) as T planes.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> polar_planes(const Tensor<T>& mag, const frontend::Plane& phase) {
  Tensor<T> re(mag.shape()), im(mag.shape());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    const double m = static_cast<double>(mag[i]);
    re[i] = static_cast<T>(m * std::cos(phase[i]));
    im[i] = static_cast<T>(m * std::sin(phase[i]));
  }
  return {std::move(re), std::move(im)};
}

/// Intermediate results of the 16 kHz (low-band) pipeline, all compressed.
template <typename T>
struct LfOutputs {
  Tensor<T> noisy_mag;  // [T][F]
  frontend::Plane phase;
  Tensor<T> dn_mag;
  Tensor<T> dr_mag;
  Tensor<T> residual_re;  // empty when SR is disabled
  Tensor<T> residual_im;
  frontend::ComplexSpectrogram refined;

  /// Magnitude handed to the mid/high sub-networks.
  Tensor<T> output_mag() const { return tensor_cast<T>(refined.magnitude()); }
};

template <typename T>
struct ForwardTrace {
  frontend::CompressedSpectrum noisy;  // full-band, compressed
  LfOutputs<T> lf;
  Tensor<T> mid_gain, high_gain;
  Tensor<T> mid_mag, high_mag;
  frontend::ComplexSpectrogram fused;     // compressed
  frontend::ComplexSpectrogram enhanced;  // decompressed
};

/// The five sub-networks and the signal flow connecting them.
template <typename T = float>
class DmfNet {
 public:
  DmfNet() : DmfNet(DmfConfig::full()) {}
  explicit DmfNet(DmfConfig cfg, std::uint64_t seed = 0) : cfg_(std::move(cfg)) {
    cfg_.validate();
    nn::Rng rng(seed ? seed : cfg_.training.seed);
    const auto& m = cfg_.model;
    dn = nn::FilterMaskNet<T>(1, m.filter_taps, m.encoder, m.stcm, rng);
    dr = nn::FilterMaskNet<T>(2, m.filter_taps, m.encoder, m.stcm, rng);
    if (m.use_sr_net) sr = nn::RefineNet<T>(6, m.encoder, m.stcm, rng);
    mf = nn::GainNet<T>(2, m.encoder, m.stcm, rng);
    hf = nn::GainNet<T>(3, m.encoder, m.stcm, rng);
    if (m.identity_filter_init) {
      dn.init_identity();
      dr.init_identity();
    }
  }

  nn::FilterMaskNet<T> dn, dr;
  nn::RefineNet<T> sr;
  nn::GainNet<T> mf, hf;

  const DmfConfig& config() const noexcept { return cfg_; }
  bool has_sr() const noexcept { return cfg_.model.use_sr_net; }
  std::uint64_t architecture_hash() const { return dmf::architecture_hash(cfg_); }

  template <class F>
  void visit(Subnet s, F&& f) {
    switch (s) {
      case Subnet::dn: dn.visit(f); break;
      case Subnet::dr: dr.visit(f); break;
      case Subnet::sr: if (has_sr()) sr.visit(f); break;
      case Subnet::mf: mf.visit(f); break;
      case Subnet::hf: hf.visit(f); break;
    }
  }
  template <class F>
  void visit(Subnet s, F&& f) const {
    switch (s) {
      case Subnet::dn: dn.visit(f); break;
      case Subnet::dr: dr.visit(f); break;
      case Subnet::sr: if (has_sr()) sr.visit(f); break;
      case Subnet::mf: mf.visit(f); break;
      case Subnet::hf: hf.visit(f); break;
    }
  }

  nn::ParamList<T> params(Subnet s) {
    nn::ParamList<T> out;
    visit(s, [&](nn::Param<T>& p) { out.push_back(&p); });
    return out;
  }
  nn::ConstParamList<T> params(Subnet s) const {
    nn::ConstParamList<T> out;
    visit(s, [&](const nn::Param<T>& p) { out.push_back(&p); });
    return out;
  }

  std::size_t count_parameters(Subnet s) const { return nn::count_parameters(params(s)); }
  std::size_t count_parameters() const {
    std::size_t n = 0;
    for (auto s : kAllSubnets) n += count_parameters(s);
    return n;
  }

  void freeze(Subnet s, bool frozen = true) { frozen_[static_cast<std::size_t>(s)] = frozen; }
  void freeze(const std::vector<std::string>& names) {
    for (const auto& n : names) freeze(parse_subnet(n));
  }
  void unfreeze_all() { frozen_.fill(false); }
  bool is_frozen(Subnet s) const noexcept { return frozen_[static_cast<std::size_t>(s)]; }
  const std::array<bool, 5>& frozen_flags() const noexcept { return frozen_; }
  void set_frozen_flags(const std::array<bool, 5>& f) noexcept { frozen_ = f; }

  // --- inference -----------------------------------------------------------

  /// DN -> DR -> SR on a compressed low-band (or 16 kHz) spectrum.
  LfOutputs<T> lf_forward(const frontend::CompressedSpectrum& noisy) const {
    const auto rule = cfg_.model.tap_offsets;
    LfOutputs<T> o;
    o.noisy_mag = tensor_cast<T>(noisy.mag);
    o.phase = noisy.phase;
    o.dn_mag = filter_magnitude(dn.forward(stack_planes<T>({&o.noisy_mag})), o.noisy_mag, rule);
    o.dr_mag = filter_magnitude(dr.forward(stack_planes<T>({&o.dn_mag, &o.noisy_mag})), o.dn_mag, rule);
    const auto dr_plane = tensor_cast<double>(o.dr_mag);
    o.refined = frontend::ComplexSpectrogram::from_polar(dr_plane, o.phase);
    if (!has_sr()) return o;
    auto r = sr.forward(sr_input(o));
    o.residual_re = std::move(r.re);
    o.residual_im = std::move(r.im);
    auto& v = o.refined.values();
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] += frontend::Complex(static_cast<double>(o.residual_re[i]),
                                static_cast<double>(o.residual_im[i]));
    return o;
  }

  /// Six-channel SR input: RI of the DN-coupled, DR-coupled and noisy spectra.
  Tensor<T> sr_input(const LfOutputs<T>& o) const {
    auto [dn_re, dn_im] = polar_planes(o.dn_mag, o.phase);
    auto [dr_re, dr_im] = polar_planes(o.dr_mag, o.phase);
    auto [x_re, x_im] = polar_planes(o.noisy_mag, o.phase);
    return stack_planes<T>({&dn_re, &dn_im, &dr_re, &dr_im, &x_re, &x_im});
  }

  Tensor<T> mf_gain(const Tensor<T>& noisy_mid_mag, const Tensor<T>& lf_mag) const {
    return mf.forward(stack_planes<T>({&noisy_mid_mag, &lf_mag}));
  }
  Tensor<T> hf_gain(const Tensor<T>& noisy_high_mag, const Tensor<T>& lf_mag,
                    const Tensor<T>& mf_mag) const {
    return hf.forward(stack_planes<T>({&noisy_high_mag, &lf_mag, &mf_mag}));
  }

  /// Estimated compressed mid-band magnitude.
  Tensor<T> mf_forward(const Tensor<T>& noisy_mid_mag, const Tensor<T>& lf_mag) const {
    return hadamard(noisy_mid_mag, mf_gain(noisy_mid_mag, lf_mag));
  }
  Tensor<T> hf_forward(const Tensor<T>& noisy_high_mag, const Tensor<T>& lf_mag,
                       const Tensor<T>& mf_mag) const {
    return hadamard(noisy_high_mag, hf_gain(noisy_high_mag, lf_mag, mf_mag));
  }

  /// Full-band enhancement of a mono waveform at the configured rate.
  std::vector<float> full_forward(const std::vector<float>& x, int sample_rate_hz,
                                  ForwardTrace<T>* trace = nullptr) const {
    const auto& fe = cfg_.frontend;
    if (sample_rate_hz != fe.sample_rate_hz)
      throw ConfigError("full_forward expects " + std::to_string(fe.sample_rate_hz) +
                        " Hz input, got " + std::to_string(sample_rate_hz) + " Hz");
    if (x.empty()) throw InputError("full_forward: empty waveform");
    // one extra hop so every input sample lies inside a fully overlapped region
    std::vector<double> padded(x.begin(), x.end());
    padded.resize(x.size() + fe.hop_samples, 0.0);

    ForwardTrace<T> local;
    ForwardTrace<T>& tr = trace ? *trace : local;
    tr.noisy = frontend::compress(frontend::stft(padded, fe), fe.compression_beta);
    const auto mags = frontend::split_bands(tr.noisy.mag, cfg_.bands);
    const auto phases = frontend::split_bands(tr.noisy.phase, cfg_.bands);

    tr.lf = lf_forward({mags.low, phases.low});
    const auto lf_mag = tr.lf.output_mag();
    const auto mid_in = tensor_cast<T>(mags.mid);
    const auto high_in = tensor_cast<T>(mags.high);
    tr.mid_gain = mf_gain(mid_in, lf_mag);
    tr.mid_mag = hadamard(mid_in, tr.mid_gain);
    tr.high_gain = hf_gain(high_in, lf_mag, tr.mid_mag);
    tr.high_mag = hadamard(high_in, tr.high_gain);

    const auto mid = frontend::ComplexSpectrogram::from_polar(tensor_cast<double>(tr.mid_mag), phases.mid);
    const auto high =
        frontend::ComplexSpectrogram::from_polar(tensor_cast<double>(tr.high_mag), phases.high);
    tr.fused = frontend::fuse_bands(tr.lf.refined, mid, high, cfg_.bands);
    tr.enhanced = frontend::decompress(tr.fused, fe.compression_beta);
    const auto y = frontend::istft(tr.enhanced, fe, padded.size());
    return {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(x.size())};
  }

 private:
  static Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_shape(a.same_shape(b), "hadamard: " + a.shape_string() + " vs " + b.shape_string());
    Tensor<T> r(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
  }

  DmfConfig cfg_;
  std::array<bool, 5> frozen_{};
};

}  // namespace dmf
