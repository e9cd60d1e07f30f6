#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dmf/data/resample.hpp"
#include "dmf/frontend/config.hpp"
#include "dmf/frontend/fft.hpp"
#include "dmf/frontend/stft.hpp"

namespace dmf::eval {

inline constexpr double kSiSnrCapDb = 60.0;

/// Scale-invariant SNR of `est` against `ref` after mean removal, capped at 60 dB.
template <typename A, typename B>
double si_snr(std::span<const A> est, std::span<const B> ref) {
  if (est.size() != ref.size())
    throw ShapeError("si_snr: lengths differ (" + std::to_string(est.size()) + " vs " +
                     std::to_string(ref.size()) + ")");
  if (ref.empty()) throw InputError("si_snr: empty signals");
  const double n = static_cast<double>(ref.size());
  double me = 0.0, mr = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    me += static_cast<double>(est[i]);
    mr += static_cast<double>(ref[i]);
  }
  me /= n;
  mr /= n;
  double dot = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double e = static_cast<double>(est[i]) - me, r = static_cast<double>(ref[i]) - mr;
    dot += e * r;
    rr += r * r;
  }
  if (!(rr > 0.0)) throw InputError("si_snr: reference has zero power");
  const double a = dot / rr;
  double st = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double r = static_cast<double>(ref[i]) - mr;
    const double s = a * r, e = static_cast<double>(est[i]) - me - s;
    st += s * s;
    ee += e * e;
  }
  if (ee <= 0.0) return kSiSnrCapDb;
  if (st <= 0.0) return -kSiSnrCapDb;
  return std::clamp(10.0 * std::log10(st / ee), -kSiSnrCapDb, kSiSnrCapDb);
}

template <typename A, typename B>
double si_snr(const std::vector<A>& est, const std::vector<B>& ref) {
  return si_snr(std::span<const A>(est), std::span<const B>(ref));
}

// --- STOI ------------------------------------------------------------------

namespace stoi_detail {

inline constexpr int kFs = 10000;
inline constexpr std::size_t kFrame = 256;
inline constexpr std::size_t kFft = 512;
inline constexpr std::size_t kBands = 15;
inline constexpr double kMinFreq = 150.0;
inline constexpr std::size_t kSegment = 30;
inline constexpr double kBeta = -15.0;
inline constexpr double kDynRange = 40.0;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// hanning(n + 2) without its zero end points.
inline std::vector<double> window() {
  std::vector<double> w(kFrame);
  for (std::size_t i = 0; i < kFrame; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i + 1) / static_cast<double>(kFrame + 1));
  return w;
}

/// One-third octave band matrix as [first, last) bin ranges.
inline std::array<std::pair<std::size_t, std::size_t>, kBands> third_octave_bands() {
  const std::size_t bins = kFft / 2 + 1;
  std::vector<double> f(bins);
  for (std::size_t i = 0; i < bins; ++i) f[i] = static_cast<double>(kFs) * i / static_cast<double>(kFft);
  auto nearest = [&](double target) {
    std::size_t best = 0;
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bins; ++i) {
      const double e = (f[i] - target) * (f[i] - target);
      if (e < d) {
        d = e;
        best = i;
      }
    }
    return best;
  };
  std::array<std::pair<std::size_t, std::size_t>, kBands> out{};
  for (std::size_t k = 0; k < kBands; ++k) {
    const double kk = static_cast<double>(k);
    out[k] = {nearest(kMinFreq * std::pow(2.0, (2 * kk - 1) / 6)),
              nearest(kMinFreq * std::pow(2.0, (2 * kk + 1) / 6))};
  }
  return out;
}

/// Drop frames of x more than 40 dB below its loudest frame (same frames of
/// y) and overlap-add the rest.
inline void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = window();
  const std::size_t hop = kFrame / 2;
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + kFrame < x.size(); i += hop) starts.push_back(i);
  if (starts.empty()) throw InputError("stoi: signal shorter than one analysis frame");
  std::vector<double> energy(starts.size());
  for (std::size_t k = 0; k < starts.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < kFrame; ++i) {
      const double v = w[i] * x[starts[k] + i];
      s += v * v;
    }
    energy[k] = 20.0 * std::log10(std::sqrt(s) + kEps);
  }
  const double peak = *std::max_element(energy.begin(), energy.end());
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < starts.size(); ++k)
    if (peak - kDynRange - energy[k] < 0.0) keep.push_back(starts[k]);
  const std::size_t len = (keep.size() - 1) * hop + kFrame;
  std::vector<double> xs(len, 0.0), ys(len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k)
    for (std::size_t i = 0; i < kFrame; ++i) {
      xs[k * hop + i] += w[i] * x[keep[k] + i];
      ys[k * hop + i] += w[i] * y[keep[k] + i];
    }
  x = std::move(xs);
  y = std::move(ys);
}

/// One-third octave envelopes [band][frame].
inline std::vector<std::vector<double>> octave_envelopes(const std::vector<double>& x) {
  const auto w = window();
  const auto bands = third_octave_bands();
  const frontend::RealFft fft(kFft);
  std::vector<double> buf(kFft);
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<std::vector<double>> env(kBands);
  for (std::size_t s = 0; s + kFrame < x.size(); s += kFrame / 2) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < kFrame; ++i) buf[i] = w[i] * x[s + i];
    fft.forward(buf, spec);
    for (std::size_t b = 0; b < kBands; ++b) {
      double p = 0.0;
      for (std::size_t k = bands[b].first; k < bands[b].second; ++k) p += std::norm(spec[k]);
      env[b].push_back(std::sqrt(p));
    }
  }
  return env;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace stoi_detail

/// Short-time objective intelligibility between a clean reference and a
/// processed signal; `extended` selects the extended variant.
template <typename A, typename B>
double stoi(std::span<const A> clean, std::span<const B> processed, int fs, bool extended = false) {
  using namespace stoi_detail;
  if (clean.size() != processed.size()) throw ShapeError("stoi: lengths differ");
  std::vector<double> x(clean.begin(), clean.end()), y(processed.begin(), processed.end());
  if (fs != kFs) {
    x = data::resample(std::span<const double>(x), fs, kFs, 60.0);
    y = data::resample(std::span<const double>(y), fs, kFs, 60.0);
  }
  remove_silent_frames(x, y);
  const auto xe = octave_envelopes(x);
  const auto ye = octave_envelopes(y);
  const std::size_t frames = xe[0].size();
  if (frames < kSegment)
    throw InputError("stoi: fewer than " + std::to_string(kSegment) +
                     " active analysis frames; clip too short");
  const std::size_t segs = frames - kSegment + 1;
  const double clip = std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  std::vector<double> xs(kSegment), ys(kSegment);

  if (!extended) {
    for (std::size_t m = 0; m < segs; ++m)
      for (std::size_t b = 0; b < kBands; ++b) {
        std::copy_n(xe[b].begin() + static_cast<std::ptrdiff_t>(m), kSegment, xs.begin());
        std::copy_n(ye[b].begin() + static_cast<std::ptrdiff_t>(m), kSegment, ys.begin());
        const double alpha = norm(xs) / (norm(ys) + kEps);
        for (std::size_t i = 0; i < kSegment; ++i) ys[i] = std::min(ys[i] * alpha, xs[i] * (1.0 + clip));
        const double mx = mean(xs), my = mean(ys);
        for (std::size_t i = 0; i < kSegment; ++i) {
          xs[i] -= mx;
          ys[i] -= my;
        }
        const double nx = norm(xs) + kEps, ny = norm(ys) + kEps;
        double c = 0.0;
        for (std::size_t i = 0; i < kSegment; ++i) c += (xs[i] / nx) * (ys[i] / ny);
        total += c;
      }
    return total / static_cast<double>(segs * kBands);
  }

  // extended: row (time) then column (band) mean/variance normalisation
  auto normalize = [&](const std::vector<std::vector<double>>& env, std::size_t m) {
    std::vector<double> s(kBands * kSegment);
    for (std::size_t b = 0; b < kBands; ++b) {
      auto row = std::span<double>(s).subspan(b * kSegment, kSegment);
      std::copy_n(env[b].begin() + static_cast<std::ptrdiff_t>(m), kSegment, row.begin());
      const double mu = mean(row);
      for (auto& v : row) v -= mu;
      const double n = norm(row);
      for (auto& v : row) v /= n;
    }
    for (std::size_t i = 0; i < kSegment; ++i) {
      double mu = 0.0, ss = 0.0;
      for (std::size_t b = 0; b < kBands; ++b) mu += s[b * kSegment + i];
      mu /= kBands;
      for (std::size_t b = 0; b < kBands; ++b) {
        s[b * kSegment + i] -= mu;
        ss += s[b * kSegment + i] * s[b * kSegment + i];
      }
      const double n = std::sqrt(ss);
      for (std::size_t b = 0; b < kBands; ++b) s[b * kSegment + i] /= n;
    }
    return s;
  };
  for (std::size_t m = 0; m < segs; ++m) {
    const auto xn = normalize(xe, m), yn = normalize(ye, m);
    double c = 0.0;
    for (std::size_t i = 0; i < xn.size(); ++i) c += xn[i] * yn[i];
    total += c / static_cast<double>(kSegment);
  }
  return total / static_cast<double>(segs);
}

template <typename A, typename B>
double stoi(const std::vector<A>& clean, const std::vector<B>& processed, int fs, bool extended = false) {
  return stoi(std::span<const A>(clean), std::span<const B>(processed), fs, extended);
}

// --- LSD -------------------------------------------------------------------

/// Power floor for LSD: -100 dB relative to a full-scale sine.
inline constexpr double kLsdFloorPower = 1e-10;

/// Mean over frames of the RMS (over bins) log-power difference in dB.
/// Inputs are power planes [T][F]; `band` restricts the bins.
inline double lsd(const Tensor<double>& est_power, const Tensor<double>& ref_power,
                  std::optional<frontend::BinRange> band = std::nullopt) {
  if (est_power.shape() != ref_power.shape() || est_power.rank() != 2)
    throw ShapeError("lsd: shapes differ (" + est_power.shape_string() + " vs " +
                     ref_power.shape_string() + ")");
  const std::size_t frames = ref_power.dim(0), bins = ref_power.dim(1);
  const frontend::BinRange r = band.value_or(frontend::BinRange{0, bins - 1});
  if (frames == 0 || r.last >= bins || r.first > r.last) throw ShapeError("lsd: empty or invalid band");
  constexpr double floor = kLsdFloorPower;
  double acc = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    double s = 0.0;
    for (std::size_t f = r.first; f <= r.last; ++f) {
      const double d = 10.0 * std::log10(std::max(ref_power.at(t, f), floor) /
                                         std::max(est_power.at(t, f), floor));
      s += d * d;
    }
    acc += std::sqrt(s / static_cast<double>(r.size()));
  }
  return acc / static_cast<double>(frames);
}

inline Tensor<double> power_plane(const frontend::ComplexSpectrogram& s) {
  Tensor<double> p({s.frames(), s.bins()});
  for (std::size_t i = 0; i < s.size(); ++i) p[i] = std::norm(s.values()[i]);
  return p;
}

inline double lsd(const frontend::ComplexSpectrogram& est, const frontend::ComplexSpectrogram& ref,
                  std::optional<frontend::BinRange> band = std::nullopt) {
  return lsd(power_plane(est), power_plane(ref), band);
}

/// LSD of two waveforms through the given front-end.
template <typename A, typename B>
double lsd_waveforms(const std::vector<A>& est, const std::vector<B>& ref,
                     const frontend::FrontendConfig& fe,
                     std::optional<frontend::BinRange> band = std::nullopt) {
  if (est.size() != ref.size()) throw ShapeError("lsd: lengths differ");
  return lsd(frontend::stft(est, fe), frontend::stft(ref, fe), band);
}

}  // namespace dmf::eval
