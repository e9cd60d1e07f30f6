#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "dmf/data/resample.hpp"
#include "dmf/data/synth.hpp"
#include "dmf/frontend/compression.hpp"
#include "dmf/frontend/stft.hpp"

namespace dmf::data {

/// Compressed spectra of one (cropped) training pair.
struct SpectralItem {
  frontend::CompressedSpectrum noisy;
  frontend::CompressedSpectrum reverberant;  // denoised, still reverberant
  frontend::CompressedSpectrum clean;        // direct path + early reflections
};

inline SpectralItem spectral_view(const TrainingPair& p, const frontend::FrontendConfig& fe,
                                  std::size_t offset = 0, std::size_t length = 0) {
  if (p.sample_rate_hz != fe.sample_rate_hz)
    throw ConfigError("pair at " + std::to_string(p.sample_rate_hz) + " Hz fed to a " +
                      std::to_string(fe.sample_rate_hz) + " Hz front-end");
  const std::size_t n = length ? length : p.noisy.size();
  auto crop = [&](const std::vector<float>& x) {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n && offset + i < x.size(); ++i) y[i] = x[offset + i];
    return frontend::compress(frontend::stft(y, fe), fe.compression_beta);
  };
  return {crop(p.noisy), crop(p.target_denoised_reverberant), crop(p.target_clean)};
}

/// The same pair at 16 kHz for low-band pretraining.
inline TrainingPair to_16k(const TrainingPair& p) {
  if (p.sample_rate_hz == 16000) return p;
  TrainingPair q = p;
  q.sample_rate_hz = 16000;
  q.noisy = resample_to_16k(p.noisy, p.sample_rate_hz);
  q.target_denoised_reverberant = resample_to_16k(p.target_denoised_reverberant, p.sample_rate_hz);
  q.target_clean = resample_to_16k(p.target_clean, p.sample_rate_hz);
  return q;
}

/// Synthesize every record; skipped records are reported through `on_skip`.
inline std::vector<TrainingPair> load_pairs(
    const Manifest& m, double early_ms,
    const std::function<void(const std::string&)>& on_skip = {}) {
  std::vector<TrainingPair> out;
  for (const auto& spec : m.items) {
    auto r = synthesize_pair(spec, early_ms);
    if (r)
      out.push_back(std::move(*r.pair));
    else if (on_skip)
      on_skip(r.skip_reason);
  }
  return out;
}

struct BatchOptions {
  std::size_t batch_size = 16;
  std::size_t crop_samples = 0;  // 0: whole clips
  std::uint64_t seed = 0;
  frontend::FrontendConfig frontend = frontend::FrontendConfig::full_band();
};

struct Batch {
  std::vector<SpectralItem> items;
  std::vector<std::size_t> sources;  // pair index per item
};

/// Endless seeded stream of fixed-length spectral batches; the pair order is
/// reshuffled at every epoch.
class BatchIterator {
 public:
  BatchIterator(std::vector<TrainingPair> pairs, BatchOptions o)
      : pairs_(std::move(pairs)), o_(std::move(o)), rng_(o_.seed) {
    if (pairs_.empty()) throw InputError("batch iterator: empty manifest");
    if (o_.batch_size == 0) throw ConfigError("batch size must be positive");
    order_.resize(pairs_.size());
    reshuffle();
  }

  Batch next() {
    Batch b;
    for (std::size_t i = 0; i < o_.batch_size; ++i) {
      if (cursor_ == order_.size()) {
        ++epoch_;
        reshuffle();
      }
      const std::size_t idx = order_[cursor_++];
      const auto& p = pairs_[idx];
      std::size_t offset = 0;
      if (o_.crop_samples && p.noisy.size() > o_.crop_samples)
        offset = std::uniform_int_distribution<std::size_t>(0, p.noisy.size() - o_.crop_samples)(rng_);
      b.items.push_back(spectral_view(p, o_.frontend, offset, o_.crop_samples));
      b.sources.push_back(idx);
    }
    return b;
  }

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  const std::vector<TrainingPair>& pairs() const noexcept { return pairs_; }
  const BatchOptions& options() const noexcept { return o_; }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }

  std::vector<TrainingPair> pairs_;
  BatchOptions o_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0, epoch_ = 0;
};

}  // namespace dmf::data
