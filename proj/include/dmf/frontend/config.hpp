#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dmf/core/error.hpp"

namespace dmf::frontend {

enum class WindowKind { hann };

/// Analysis/synthesis parameters. Defaults are the 48 kHz full-band setup:
/// 20 ms periodic Hann window, 50% overlap, 960-point FFT (481 bins),
/// magnitude power-compression exponent 0.5.
struct FrontendConfig {
  int sample_rate_hz = 48000;
  std::size_t win_len_samples = 960;
  std::size_t hop_samples = 480;
  std::size_t fft_size = 960;
  WindowKind window = WindowKind::hann;
  double compression_beta = 0.5;

  std::size_t bins() const noexcept { return fft_size / 2 + 1; }

  void validate() const {
    if (sample_rate_hz <= 0) throw ConfigError("sample_rate_hz must be positive");
    if (win_len_samples == 0 || win_len_samples % 2 != 0)
      throw ConfigError("win_len_samples must be positive and even");
    if (hop_samples * 2 != win_len_samples)
      throw ConfigError("hop_samples must equal win_len_samples / 2");
    if (fft_size < win_len_samples) throw ConfigError("fft_size must be >= win_len_samples");
    if (!(compression_beta > 0.0 && compression_beta <= 1.0))
      throw ConfigError("compression_beta must lie in (0, 1]");
  }

  bool operator==(const FrontendConfig&) const = default;

  /// 48 kHz full-band front-end.
  static FrontendConfig full_band() { return {}; }

  /// 16 kHz front-end with the same 20 ms / 50 Hz-per-bin geometry (161 bins).
  static FrontendConfig wide_band() {
    FrontendConfig c;
    c.sample_rate_hz = 16000;
    c.win_len_samples = 320;
    c.hop_samples = 160;
    c.fft_size = 320;
    return c;
  }
};

/// Inclusive bin range [first, last].
struct BinRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const noexcept { return last - first + 1; }
  bool contains(std::size_t k) const noexcept { return k >= first && k <= last; }
  bool operator==(const BinRange&) const = default;
};

enum class OverlapPolicy { average };

/// Low/mid/high sub-band ranges over a one-sided spectrum. Adjacent bands
/// share `overlap` bins; shared bins are averaged on fusion.
struct BandLayout {
  BinRange low{0, 160};
  BinRange mid{160, 320};
  BinRange high{320, 480};
  std::size_t overlap = 1;
  OverlapPolicy policy = OverlapPolicy::average;

  std::size_t total_bins() const noexcept { return high.last + 1; }

  /// Three bands of equal width sharing `overlap` bins at each boundary.
  static BandLayout equal_thirds(std::size_t bins, std::size_t overlap = 1) {
    if (overlap == 0 || bins < 3 + 2 * overlap)
      throw ConfigError("equal_thirds: too few bins for the requested overlap");
    // 3w - 2*overlap = bins
    const std::size_t span = bins + 2 * overlap;
    if (span % 3 != 0)
      throw ConfigError("equal_thirds: bins + 2*overlap must be divisible by 3");
    const std::size_t w = span / 3;
    BandLayout b;
    b.overlap = overlap;
    b.low = {0, w - 1};
    b.mid = {w - overlap, 2 * w - overlap - 1};
    b.high = {2 * w - 2 * overlap, 3 * w - 2 * overlap - 1};
    return b;
  }

  void validate(std::size_t bins) const {
    if (low.first != 0) throw ShapeError("band layout must start at bin 0");
    if (high.last + 1 != bins)
      throw ShapeError("band layout covers " + std::to_string(high.last + 1) +
                       " bins but spectrum has " + std::to_string(bins));
    if (low.last < low.first || mid.last < mid.first || high.last < high.first)
      throw ShapeError("band layout has an empty range");
    if (overlap == 0) throw ShapeError("band layout overlap must be >= 1");
    if (low.last + 1 != mid.first + overlap || mid.last + 1 != high.first + overlap)
      throw ShapeError("adjacent bands must overlap by exactly " + std::to_string(overlap) +
                       " bins");
    if (mid.size() <= overlap || high.size() <= overlap)
      throw ShapeError("bands must be wider than the overlap");
  }

  /// Per-bin fusion weight for band `band` (0 low, 1 mid, 2 high) at
  /// absolute bin `k`: 1 / (number of bands covering k), or 0 outside.
  double fusion_weight(int band, std::size_t k) const noexcept {
    const BinRange* r[3] = {&low, &mid, &high};
    if (!r[band]->contains(k)) return 0.0;
    int cover = 0;
    for (const auto* b : r) cover += b->contains(k) ? 1 : 0;
    return 1.0 / cover;
  }

  bool operator==(const BandLayout&) const = default;
};

}  // namespace dmf::frontend
