#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dmf/data/manifest.hpp"
#include "dmf/frontend/fft.hpp"
#include "dmf/frontend/wav.hpp"

namespace dmf::data {

// Procedural stand-ins for speech, noise and room responses. Speech-like
// signals alternate voiced segments (glottal harmonics through three formant
// resonances), fricative bursts and pauses.

namespace detail_corpus {

inline double formant_gain(double f, const double (&fc)[3], const double (&bw)[3]) {
  double g = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = (f - fc[i]) / bw[i];
    g += std::exp(-0.5 * d * d) / (i + 1.0);
  }
  const double tilt = f > 1000.0 ? 1000.0 / f : 1.0;
  return 0.05 * tilt + g * tilt;
}

/// Shape white noise with `gain(f)` in the frequency domain.
template <class G>
std::vector<double> shaped_noise(std::size_t n, int fs, std::mt19937_64& rng, G&& gain) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(m);
  for (auto& v : x) v = g(rng);
  const frontend::RealFft fft(m);
  std::vector<std::complex<double>> X(fft.bins());
  fft.forward(x, X);
  for (std::size_t k = 0; k < X.size(); ++k)
    X[k] *= gain(static_cast<double>(k) * fs / static_cast<double>(m));
  fft.inverse(X, x);
  x.resize(n);
  return x;
}

inline void normalize_rms(std::vector<double>& x, double rms) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p = std::sqrt(p / std::max<std::size_t>(1, x.size()));
  if (p > 0.0)
    for (double& v : x) v *= rms / p;
}

inline std::vector<float> to_float(const std::vector<double>& x) { return {x.begin(), x.end()}; }

}  // namespace detail_corpus

inline std::vector<float> synth_speech(double seconds, int fs, std::uint64_t seed) {
  using namespace detail_corpus;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<std::size_t>(seconds * fs);
  std::vector<double> y(n, 0.0);
  const double base_f0 = 90.0 + 150.0 * u(rng);
  const double nyq = 0.5 * fs;
  std::size_t pos = static_cast<std::size_t>(0.05 * fs * u(rng));
  while (pos < n) {
    const double r = u(rng);
    if (r < 0.58) {  // voiced
      const auto len = static_cast<std::size_t>((0.08 + 0.2 * u(rng)) * fs);
      const double f0a = base_f0 * (0.85 + 0.3 * u(rng)), f0b = f0a * (0.85 + 0.3 * u(rng));
      const double fc[3] = {300 + 600 * u(rng), 900 + 1600 * u(rng), 2300 + 1200 * u(rng)};
      const double bw[3] = {80 + 80 * u(rng), 100 + 100 * u(rng), 150 + 150 * u(rng)};
      const double amp = 0.5 + u(rng);
      const int nh = static_cast<int>(0.95 * nyq / std::max(f0a, f0b));
      std::vector<double> ph(static_cast<std::size_t>(nh), 0.0);
      for (auto& p : ph) p = 2 * M_PI * u(rng);
      const std::size_t ramp = static_cast<std::size_t>(0.015 * fs);
      for (std::size_t i = 0; i < len && pos + i < n; ++i) {
        const double a = static_cast<double>(i) / static_cast<double>(len);
        const double f0 = f0a + (f0b - f0a) * a;
        double env = 1.0;
        if (i < ramp) env = 0.5 - 0.5 * std::cos(M_PI * i / ramp);
        if (len - i < ramp) env = 0.5 - 0.5 * std::cos(M_PI * (len - i) / ramp);
        double s = 0.0;
        for (int h = 1; h <= nh; ++h) {
          const double f = h * f0;
          if (f >= 0.95 * nyq) break;
          auto& p = ph[static_cast<std::size_t>(h - 1)];
          p += 2 * M_PI * f / fs;
          if (p > 2 * M_PI) p -= 2 * M_PI;
          s += formant_gain(f, fc, bw) * std::sin(p);
        }
        y[pos + i] += amp * env * s;
      }
      pos += len;
    } else if (r < 0.78) {  // fricative
      const auto len = static_cast<std::size_t>((0.04 + 0.1 * u(rng)) * fs);
      const double centre = std::min(3000.0 + 9000.0 * u(rng), 0.8 * nyq);
      const double width = 0.5 * centre;
      auto burst = shaped_noise(len, fs, rng, [&](double f) {
        const double d = (f - centre) / width;
        return std::exp(-0.5 * d * d);
      });
      normalize_rms(burst, 0.3 + 0.4 * u(rng));
      for (std::size_t i = 0; i < len && pos + i < n; ++i)
        y[pos + i] += burst[i] * std::sin(M_PI * static_cast<double>(i) / static_cast<double>(len));
      pos += len;
    } else {
      pos += static_cast<std::size_t>((0.03 + 0.12 * u(rng)) * fs);
    }
  }
  normalize_rms(y, 0.08);
  return to_float(y);
}

enum class NoiseKind { white, pink, brown, babble, hum, modulated };

inline std::vector<float> synth_noise(NoiseKind kind, double seconds, int fs, std::uint64_t seed) {
  using namespace detail_corpus;
  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::size_t>(seconds * fs);
  std::vector<double> y;
  switch (kind) {
    case NoiseKind::white:
      y = shaped_noise(n, fs, rng, [](double) { return 1.0; });
      break;
    case NoiseKind::pink:
      y = shaped_noise(n, fs, rng, [](double f) { return 1.0 / std::sqrt(std::max(f, 20.0)); });
      break;
    case NoiseKind::brown:
      y = shaped_noise(n, fs, rng, [](double f) { return 1.0 / std::max(f, 50.0); });
      break;
    case NoiseKind::babble: {
      y.assign(n, 0.0);
      for (int k = 0; k < 5; ++k) {
        const auto s = synth_speech(seconds, fs, seed * 7919 + static_cast<std::uint64_t>(k));
        for (std::size_t i = 0; i < n; ++i) y[i] += s[i];
      }
      break;
    }
    case NoiseKind::hum: {
      y = shaped_noise(n, fs, rng, [](double f) { return 0.2 / std::sqrt(std::max(f, 20.0)); });
      const double f0 = 50.0 + 10.0 * std::uniform_real_distribution<double>(0, 1)(rng);
      for (std::size_t i = 0; i < n; ++i)
        for (int h = 1; h <= 8; ++h) y[i] += std::sin(2 * M_PI * h * f0 * i / fs) / h;
      break;
    }
    case NoiseKind::modulated: {
      y = shaped_noise(n, fs, rng, [](double f) { return 1.0 / std::sqrt(std::max(f, 100.0)); });
      const double rate = 1.0 + 4.0 * std::uniform_real_distribution<double>(0, 1)(rng);
      for (std::size_t i = 0; i < n; ++i) y[i] *= 0.6 + 0.4 * std::sin(2 * M_PI * rate * i / fs);
      break;
    }
  }
  normalize_rms(y, 0.05);
  return to_float(y);
}

/// Exponentially decaying room response with a unit direct path.
inline std::vector<float> synth_rir(int fs, double rt60_s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto len = static_cast<std::size_t>(std::min(1.2 * rt60_s, 1.0) * fs);
  const auto delay = static_cast<std::size_t>((0.001 + 0.004 * u(rng)) * fs);
  std::vector<double> h(std::max(len, delay + 2), 0.0);
  h[delay] = 1.0;
  const double decay = 6.9078 / (rt60_s * fs);  // 60 dB over rt60
  const double tail = 0.08 + 0.1 * u(rng);
  for (std::size_t i = delay + 1; i < h.size(); ++i)
    h[i] = tail * g(rng) * std::exp(-decay * static_cast<double>(i - delay));
  for (int r = 0; r < 6; ++r) {
    const auto at = delay + static_cast<std::size_t>((0.002 + 0.03 * u(rng)) * fs);
    if (at < h.size()) h[at] += (u(rng) < 0.5 ? -1 : 1) * (0.2 + 0.4 * u(rng));
  }
  return detail_corpus::to_float(h);
}

struct CorpusOptions {
  std::size_t clips = 10;
  double seconds = 2.0;
  int sample_rate_hz = 48000;
  double snr_min_db = 0.0;
  double snr_max_db = 5.0;
  bool reverberant = true;
  double rt60_min_s = 0.2;
  double rt60_max_s = 0.5;
  std::uint64_t seed = 1;
};

/// Write clean/noise/RIR WAV files and a MixtureSpec manifest into `dir`.
inline std::vector<MixtureSpec> generate_corpus(const std::filesystem::path& dir,
                                                const CorpusOptions& o) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::array<NoiseKind, 5> kinds{NoiseKind::white, NoiseKind::pink, NoiseKind::babble,
                                       NoiseKind::hum, NoiseKind::modulated};
  std::vector<MixtureSpec> specs;
  for (std::size_t i = 0; i < o.clips; ++i) {
    const auto tag = std::to_string(i);
    const auto s_seed = rng(), n_seed = rng(), r_seed = rng();
    MixtureSpec m;
    m.clean_path = (dir / ("clean_" + tag + ".wav")).string();
    m.noise_path = (dir / ("noise_" + tag + ".wav")).string();
    frontend::write_wav(m.clean_path, synth_speech(o.seconds, o.sample_rate_hz, s_seed), o.sample_rate_hz,
                        frontend::WavFormat::float32);
    frontend::write_wav(m.noise_path,
                        synth_noise(kinds[i % kinds.size()], o.seconds + 1.0, o.sample_rate_hz, n_seed),
                        o.sample_rate_hz, frontend::WavFormat::float32);
    if (o.reverberant) {
      m.rir_path = (dir / ("rir_" + tag + ".wav")).string();
      const double rt60 = o.rt60_min_s + (o.rt60_max_s - o.rt60_min_s) * u(rng);
      frontend::write_wav(*m.rir_path, synth_rir(o.sample_rate_hz, rt60, r_seed), o.sample_rate_hz,
                          frontend::WavFormat::float32);
    }
    m.snr_db = o.snr_min_db + (o.snr_max_db - o.snr_min_db) * u(rng);
    m.seed = o.seed * 1000003ULL + i;
    specs.push_back(std::move(m));
  }
  write_manifest(dir / "manifest.jsonl", specs);
  return specs;
}

}  // namespace dmf::data
