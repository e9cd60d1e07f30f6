#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "dmf/core/error.hpp"

namespace dmf::data {

inline std::vector<double> kaiser_window(std::size_t n, double beta) {
  std::vector<double> w(n, 1.0);
  if (n == 1) return w;
  const double i0b = std::cyl_bessel_i(0.0, beta);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
    w[i] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
  }
  return w;
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

/// Kaiser-windowed sinc anti-aliasing filter for p/q resampling, normalised
/// to unit DC gain. Stop-band cutoff 1/(2 max(p, q)), transition width a tenth
/// of that, length chosen by the Kaiser formula for `rejection_db`.
inline std::vector<double> design_resampling_filter(std::size_t p, std::size_t q,
                                                    double rejection_db) {
  const std::size_t g = std::gcd(p, q);
  p /= g;
  q /= g;
  const double cutoff = 1.0 / (2.0 * static_cast<double>(std::max(p, q)));
  const double roll_off = cutoff / 10.0;
  const auto half = static_cast<long>(std::ceil((rejection_db - 8.0) / (28.714 * roll_off)));
  double beta = 0.0;
  if (rejection_db > 50.0)
    beta = 0.1102 * (rejection_db - 8.7);
  else if (rejection_db >= 21.0)
    beta = 0.5842 * std::pow(rejection_db - 21.0, 0.4) + 0.07886 * (rejection_db - 21.0);
  const auto win = kaiser_window(static_cast<std::size_t>(2 * half + 1), beta);
  std::vector<double> h(win.size());
  double sum = 0.0;
  for (long t = -half; t <= half; ++t) {
    const auto i = static_cast<std::size_t>(t + half);
    h[i] = win[i] * 2.0 * static_cast<double>(p) * cutoff * sinc(2.0 * cutoff * static_cast<double>(t));
    sum += h[i];
  }
  for (auto& v : h) v /= sum;
  return h;
}

/// Polyphase rational resampling with an odd-length linear-phase filter `h`
/// (scaled by `up` internally). Output sample m is
///   y[m] = up * sum_i h[i] * xu[m*down + (len(h)-1)/2 - i]
/// where xu is x upsampled by zero insertion; output length ceil(n*up/down).
inline std::vector<double> resample_poly(std::span<const double> x, std::size_t up,
                                         std::size_t down, const std::vector<double>& h) {
  if (up == 0 || down == 0) throw DomainError("resample_poly: factors must be positive");
  if (h.empty() || h.size() % 2 == 0) throw DomainError("resample_poly: filter length must be odd");
  const std::size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  const std::size_t n = x.size();
  const std::size_t n_out = (n * up + down - 1) / down;
  const long half = static_cast<long>(h.size() - 1) / 2;
  const long hl = static_cast<long>(h.size());
  const long nu = static_cast<long>(n * up);
  std::vector<double> y(n_out, 0.0);
  for (std::size_t m = 0; m < n_out; ++m) {
    const long c = static_cast<long>(m * down) + half;  // xu index paired with h[0]
    // xu[c - i] nonzero only when (c - i) % up == 0 and 0 <= c - i < nu
    long i0 = c % static_cast<long>(up);
    const long lo = std::max(0L, c - nu + 1);
    if (i0 < lo) i0 += ((lo - i0 + static_cast<long>(up) - 1) / static_cast<long>(up)) * static_cast<long>(up);
    double acc = 0.0;
    for (long i = i0; i < hl && i <= c; i += static_cast<long>(up))
      acc += h[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>((c - i) / static_cast<long>(up))];
    y[m] = acc * static_cast<double>(up);
  }
  return y;
}

/// Resample between integer rates with a Kaiser design of the given rejection.
inline std::vector<double> resample(std::span<const double> x, int from_hz, int to_hz,
                                    double rejection_db = 100.0) {
  if (from_hz <= 0 || to_hz <= 0) throw InputError("resample: rates must be positive");
  if (from_hz == to_hz) return {x.begin(), x.end()};
  const auto g = std::gcd(from_hz, to_hz);
  const auto up = static_cast<std::size_t>(to_hz / g), down = static_cast<std::size_t>(from_hz / g);
  return resample_poly(x, up, down, design_resampling_filter(up, down, rejection_db));
}

inline std::vector<float> resample(const std::vector<float>& x, int from_hz, int to_hz,
                                   double rejection_db = 100.0) {
  const std::vector<double> xd(x.begin(), x.end());
  const auto y = resample(std::span<const double>(xd), from_hz, to_hz, rejection_db);
  return {y.begin(), y.end()};
}

/// Anti-aliased 3:1 decimation for the 16 kHz low-band corpus.
inline std::vector<float> resample_to_16k(const std::vector<float>& x, int sample_rate_hz) {
  if (sample_rate_hz == 16000) return x;
  if (sample_rate_hz != 48000)
    throw InputError("resample_to_16k: unsupported rate " + std::to_string(sample_rate_hz) +
                     " Hz (expected 48000)");
  return resample(x, 48000, 16000);
}

inline std::vector<float> resample_to_48k(const std::vector<float>& x, int sample_rate_hz) {
  if (sample_rate_hz == 48000) return x;
  if (sample_rate_hz != 16000)
    throw InputError("resample_to_48k: unsupported rate " + std::to_string(sample_rate_hz) +
                     " Hz (expected 16000)");
  return resample(x, 16000, 48000);
}

}  // namespace dmf::data
