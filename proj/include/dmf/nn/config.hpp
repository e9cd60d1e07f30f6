#pragma once

#include <cstddef>
#include <vector>

#include "dmf/core/error.hpp"

namespace dmf::nn {

/// Convolutional encoder: `num_blocks` stride-(1,2) blocks of conv -> norm -> PReLU.
struct EncoderConfig {
  std::size_t num_blocks = 5;
  std::size_t channels = 64;
  std::size_t first_kernel_bins = 5;  // kernel (2, 5) in block 1
  std::size_t kernel_bins = 3;        // kernel (2, 3) elsewhere
  std::size_t input_bins = 161;

  std::size_t kernel_for_block(std::size_t b) const noexcept {
    return b == 0 ? first_kernel_bins : kernel_bins;
  }

  /// Frequency size entering block 0 .. leaving the last block.
  std::vector<std::size_t> bin_table() const {
    std::vector<std::size_t> t{input_bins};
    for (std::size_t b = 0; b < num_blocks; ++b) {
      const std::size_t f = t.back(), k = kernel_for_block(b);
      if (f < k) throw ShapeError("encoder: frequency axis too short for block " + std::to_string(b));
      if ((f - k) % 2 != 0)
        throw ShapeError("encoder: block " + std::to_string(b) + " input of " + std::to_string(f) +
                         " bins cannot be restored exactly by the decoder");
      t.push_back((f - k) / 2 + 1);
    }
    return t;
  }

  bool operator==(const EncoderConfig&) const = default;
};

/// Stack of squeezed temporal convolutional modules.
struct StcmConfig {
  std::size_t groups = 3;
  std::size_t blocks_per_group = 6;
  std::vector<std::size_t> dilations{1, 2, 4, 8, 16, 32};
  std::size_t bottleneck_channels = 64;
  std::size_t temporal_kernel = 5;
  bool causal = true;

  void validate() const {
    if (dilations.size() != blocks_per_group)
      throw ConfigError("S-TCM: dilation list length must equal blocks_per_group");
    for (std::size_t i = 0; i < dilations.size(); ++i) {
      const auto d = dilations[i];
      if (d == 0 || (d & (d - 1)) != 0) throw ConfigError("S-TCM: dilations must be powers of two");
      if (i > 0 && d <= dilations[i - 1])
        throw ConfigError("S-TCM: dilations must be strictly increasing");
    }
    if (!causal) throw ConfigError("S-TCM: only causal operation is supported");
    if (temporal_kernel == 0 || bottleneck_channels == 0)
      throw ConfigError("S-TCM: kernel and bottleneck must be positive");
  }

  /// Frames of history that can influence one output frame, plus the frame itself.
  std::size_t receptive_field() const noexcept {
    std::size_t s = 0;
    for (auto d : dilations) s += d * (temporal_kernel - 1);
    return groups * s + 1;
  }

  bool operator==(const StcmConfig&) const = default;
};

/// Which neighbouring frames a multi-frame filter reads.
enum class TapOffsets {
  current_and_past,  // tau = 0 .. k-1 (identity filter representable)
  past_only          // tau = 1 .. k, the literal strictly-past indexing
};

inline std::size_t tap_offset(TapOffsets rule, std::size_t tau) noexcept {
  return rule == TapOffsets::current_and_past ? tau : tau + 1;
}

}  // namespace dmf::nn
