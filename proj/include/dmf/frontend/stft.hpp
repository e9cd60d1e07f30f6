#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "dmf/frontend/config.hpp"
#include "dmf/frontend/fft.hpp"
#include "dmf/frontend/spectrogram.hpp"

namespace dmf::frontend {

// Framing convention
// ------------------
// The waveform is left-padded with (win - hop) zeros and right-padded to a
// whole number of hops, without reflection. Frame t therefore covers input
// samples [t*hop - (win-hop), t*hop + hop) and the frame count is
// ceil(len / hop). Every frame only sees samples up to its own end, so a
// causal network over frames stays causal after synthesis.
//
// Scaling: the forward transform is multiplied by 2 / sum(window), so a
// bin-centred sinusoid of amplitude A has magnitude ~A regardless of sample
// rate. The 16 kHz and 48 kHz front-ends then produce comparable magnitudes
// for the same band-limited content.

inline std::vector<double> periodic_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n)));
  return w;
}

inline std::vector<double> make_window(const FrontendConfig& cfg) {
  switch (cfg.window) {
    case WindowKind::hann:
      return periodic_hann(cfg.win_len_samples);
  }
  throw ConfigError("unknown window");
}

inline double spectrum_scale(const FrontendConfig& cfg) {
  const auto w = make_window(cfg);
  double s = 0.0;
  for (double v : w) s += v;
  return 2.0 / s;
}

inline std::size_t frame_count(std::size_t samples, const FrontendConfig& cfg) {
  return (samples + cfg.hop_samples - 1) / cfg.hop_samples;
}

/// Number of leading output samples covered by two analysis windows (the
/// region where overlap-add reconstruction is exact): [0, (T-1)*hop).
inline std::size_t interior_length(std::size_t samples, const FrontendConfig& cfg) {
  const std::size_t t = frame_count(samples, cfg);
  return t == 0 ? 0 : std::min(samples, (t - 1) * cfg.hop_samples);
}

template <typename Sample>
ComplexSpectrogram stft(std::span<const Sample> waveform, const FrontendConfig& cfg) {
  cfg.validate();
  if (waveform.empty()) throw InputError("stft: empty waveform");
  for (Sample s : waveform)
    if (!std::isfinite(static_cast<double>(s))) throw InputError("stft: non-finite sample");

  const std::size_t win = cfg.win_len_samples;
  const std::size_t hop = cfg.hop_samples;
  const std::size_t lead = win - hop;
  const std::size_t frames = frame_count(waveform.size(), cfg);
  const auto window = make_window(cfg);
  const double scale = spectrum_scale(cfg);
  RealFft fft(cfg.fft_size);

  ComplexSpectrogram spec(frames, cfg.bins());
  std::vector<double> buf(cfg.fft_size, 0.0);
  std::vector<Complex> out(cfg.bins());
  const auto n = static_cast<std::ptrdiff_t>(waveform.size());
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const auto start = static_cast<std::ptrdiff_t>(t * hop) - static_cast<std::ptrdiff_t>(lead);
    for (std::size_t i = 0; i < win; ++i) {
      const auto idx = start + static_cast<std::ptrdiff_t>(i);
      if (idx >= 0 && idx < n) buf[i] = window[i] * static_cast<double>(waveform[idx]);
    }
    fft.forward(buf, out);
    for (std::size_t k = 0; k < out.size(); ++k) spec.at(t, k) = out[k] * scale;
  }
  return spec;
}

inline ComplexSpectrogram stft(const std::vector<double>& x, const FrontendConfig& cfg) {
  return stft(std::span<const double>(x), cfg);
}
inline ComplexSpectrogram stft(const std::vector<float>& x, const FrontendConfig& cfg) {
  return stft(std::span<const float>(x), cfg);
}

/// Weighted overlap-add inverse. `length` selects the output sample count;
/// zero means T*hop (the full padded extent minus the lead-in).
inline std::vector<double> istft(const ComplexSpectrogram& spec, const FrontendConfig& cfg,
                                 std::size_t length = 0) {
  cfg.validate();
  if (spec.bins() != cfg.bins())
    throw ShapeError("istft: spectrogram has " + std::to_string(spec.bins()) +
                     " bins, config expects " + std::to_string(cfg.bins()));
  const std::size_t win = cfg.win_len_samples;
  const std::size_t hop = cfg.hop_samples;
  const std::size_t lead = win - hop;
  const std::size_t frames = spec.frames();
  if (length == 0) length = frames * hop;

  const auto window = make_window(cfg);
  const double inv_scale = 1.0 / spectrum_scale(cfg);
  RealFft fft(cfg.fft_size);

  // Accumulate over the padded timeline, then drop the lead-in.
  const std::size_t padded = lead + frames * hop + hop;
  std::vector<double> acc(padded, 0.0), norm(padded, 0.0);
  std::vector<Complex> in(cfg.bins());
  std::vector<double> frame(cfg.fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < in.size(); ++k) in[k] = spec.at(t, k) * inv_scale;
    fft.inverse(in, frame);
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < win; ++i) {
      acc[start + i] += window[i] * frame[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  constexpr double kFloor = 1e-10;
  std::vector<double> y(length, 0.0);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t p = i + lead;
    if (p < padded) y[i] = acc[p] / std::max(norm[p], kFloor);
  }
  return y;
}

}  // namespace dmf::frontend
