#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dmf/data/manifest.hpp"
#include "dmf/frontend/fft.hpp"
#include "dmf/frontend/wav.hpp"

namespace dmf::data {

struct TrainingPair {
  int sample_rate_hz = 0;
  std::vector<float> noisy;
  std::vector<float> target_denoised_reverberant;
  std::vector<float> target_clean;
  double noise_gain = 0.0;
  double snr_db = 0.0;
};

/// Either a pair or the reason the record was skipped.
struct SynthOutcome {
  std::optional<TrainingPair> pair;
  std::string skip_reason;

  explicit operator bool() const noexcept { return pair.has_value(); }
};

/// First `out_len` samples of the linear convolution x * h.
inline std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h,
                                        std::size_t out_len) {
  if (x.empty() || h.empty()) return std::vector<double>(out_len, 0.0);
  std::size_t n = 1;
  while (n < x.size() + h.size() - 1) n <<= 1;
  const frontend::RealFft fft(n);
  std::vector<double> xa(n, 0.0), ha(n, 0.0), y(n);
  std::copy(x.begin(), x.end(), xa.begin());
  std::copy(h.begin(), h.end(), ha.begin());
  std::vector<std::complex<double>> xf(fft.bins()), hf(fft.bins());
  fft.forward(xa, xf);
  fft.forward(ha, hf);
  for (std::size_t k = 0; k < xf.size(); ++k) xf[k] *= hf[k];
  fft.inverse(xf, y);
  y.resize(out_len, 0.0);
  return y;
}

/// Samples belonging to active frames: 20 ms blocks whose energy is within
/// `floor_db` of the loudest block.
inline std::vector<bool> active_mask(std::span<const double> s, int sample_rate_hz,
                                     double floor_db = -40.0) {
  const std::size_t frame = std::max<std::size_t>(1, static_cast<std::size_t>(sample_rate_hz) / 50);
  const std::size_t nf = (s.size() + frame - 1) / frame;
  std::vector<double> e(nf, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) e[i / frame] += s[i] * s[i];
  const double peak = nf ? *std::max_element(e.begin(), e.end()) : 0.0;
  const double thr = peak * std::pow(10.0, floor_db / 10.0);
  std::vector<bool> m(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) m[i] = peak > 0.0 && e[i / frame] >= thr;
  return m;
}

inline double masked_power(std::span<const double> x, const std::vector<bool>& mask) {
  double p = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (mask[i]) {
      p += x[i] * x[i];
      ++n;
    }
  return n ? p / static_cast<double>(n) : 0.0;
}

/// g such that 10 log10(Ps / (g^2 Pn)) = snr_db.
inline double noise_gain_for_snr(double p_signal, double p_noise, double snr_db) {
  if (!(p_noise > 0.0)) throw InputError("noise segment has zero power");
  return std::sqrt(p_signal / (p_noise * std::pow(10.0, snr_db / 10.0)));
}

/// SNR of `speech` against `noise`, both measured over the active frames of `speech`.
inline double measure_snr_db(std::span<const double> speech, std::span<const double> noise,
                             int sample_rate_hz) {
  const auto mask = active_mask(speech, sample_rate_hz);
  return 10.0 * std::log10(masked_power(speech, mask) / masked_power(noise, mask));
}

/// Index of the direct-path peak; throws when the response has none.
inline std::size_t rir_peak(std::span<const double> h) {
  std::size_t best = 0;
  double mag = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!std::isfinite(h[i])) throw InputError("RIR contains non-finite samples");
    if (std::abs(h[i]) > mag) {
      mag = std::abs(h[i]);
      best = i;
    }
  }
  if (mag <= 0.0) throw InputError("RIR has no detectable direct-path peak");
  return best;
}

/// In-memory synthesis. `rir` empty means no reverberation.
inline SynthOutcome synthesize_pair(const std::vector<float>& clean, const std::vector<float>& noise,
                                    const std::vector<float>& rir, int sample_rate_hz,
                                    double snr_db, std::uint64_t seed, double early_ms = 50.0) {
  if (clean.empty()) return {std::nullopt, "empty clean signal"};
  if (noise.empty()) throw InputError("empty noise signal");
  const std::size_t n = clean.size();
  const std::vector<double> c(clean.begin(), clean.end());

  std::vector<double> reverb, target;
  if (rir.empty()) {
    reverb = c;
    target = c;
  } else {
    const std::vector<double> h(rir.begin(), rir.end());
    const std::size_t peak = rir_peak(h);
    const auto early = static_cast<std::size_t>(std::llround(early_ms * 1e-3 * sample_rate_hz));
    const std::size_t cut = std::min(h.size(), peak + early + 1);
    reverb = fft_convolve(c, h, n);
    target = fft_convolve(c, std::span<const double>(h.data(), cut), n);
  }

  const auto mask = active_mask(reverb, sample_rate_hz);
  const double ps = masked_power(reverb, mask);
  if (!(ps > 0.0)) return {std::nullopt, "silent clean segment (zero power)"};

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, noise.size() - 1);
  const std::size_t offset = pick(rng);
  std::vector<double> seg(n);
  for (std::size_t i = 0; i < n; ++i) seg[i] = noise[(offset + i) % noise.size()];

  const double g = noise_gain_for_snr(ps, masked_power(seg, mask), snr_db);
  TrainingPair p;
  p.sample_rate_hz = sample_rate_hz;
  p.noise_gain = g;
  p.snr_db = snr_db;
  p.noisy.resize(n);
  p.target_denoised_reverberant.resize(n);
  p.target_clean.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.noisy[i] = static_cast<float>(reverb[i] + g * seg[i]);
    p.target_denoised_reverberant[i] = static_cast<float>(reverb[i]);
    p.target_clean[i] = static_cast<float>(target[i]);
  }
  return {std::move(p), {}};
}

/// File-backed synthesis from a manifest record.
inline SynthOutcome synthesize_pair(const MixtureSpec& spec, double early_ms = 50.0) {
  const auto clean = frontend::read_wav(spec.clean_path);
  const auto noise = frontend::read_wav(spec.noise_path);
  if (clean.sample_rate_hz != noise.sample_rate_hz)
    throw InputError("clean (" + std::to_string(clean.sample_rate_hz) + " Hz) and noise (" +
                     std::to_string(noise.sample_rate_hz) + " Hz) sample rates differ");
  std::vector<float> rir;
  if (spec.rir_path) {
    auto r = frontend::read_wav(*spec.rir_path);
    if (r.sample_rate_hz != clean.sample_rate_hz)
      throw InputError("RIR sample rate differs from clean speech: " + *spec.rir_path);
    rir = std::move(r.samples);
  }
  auto out = synthesize_pair(clean.samples, noise.samples, rir, clean.sample_rate_hz, spec.snr_db,
                             spec.seed, early_ms);
  if (!out) out.skip_reason = spec.clean_path + ": " + out.skip_reason;
  return out;
}

}  // namespace dmf::data
