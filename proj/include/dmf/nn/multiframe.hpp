#pragma once

#include "dmf/core/tensor.hpp"
#include "dmf/nn/config.hpp"

namespace dmf::nn {

// Multi-frame magnitude filtering:
//   out[l, f] = sum_tau mask[tau, l, f] * mag[l - off(tau), f]
// with frames before 0 read as zero. mask is [k][T][F], mag is [T][F].

template <typename T>
Tensor<T> apply_multiframe_filter(const Tensor<T>& mask, const Tensor<T>& mag,
                                  TapOffsets rule = TapOffsets::current_and_past) {
  detail::require_shape(mask.rank() == 3 && mag.rank() == 2, "multiframe filter: ranks");
  detail::require_shape(mask.dim(0) >= 1, "multiframe filter: need at least one tap");
  detail::require_shape(mask.dim(1) == mag.dim(0) && mask.dim(2) == mag.dim(1),
                        "multiframe filter: mask " + mask.shape_string() + " vs magnitude " +
                            mag.shape_string());
  const std::size_t taps = mask.dim(0), frames = mag.dim(0), bins = mag.dim(1);
  Tensor<T> out({frames, bins});
  for (std::size_t tau = 0; tau < taps; ++tau) {
    const std::size_t off = tap_offset(rule, tau);
    for (std::size_t l = off; l < frames; ++l) {
      const T* m = &mask.at(tau, l, 0);
      const T* x = &mag.at(l - off, 0);
      T* o = &out.at(l, 0);
      for (std::size_t f = 0; f < bins; ++f) o[f] += m[f] * x[f];
    }
  }
  return out;
}

template <typename T>
struct MultiframeGrad {
  Tensor<T> d_mask;
  Tensor<T> d_mag;
};

template <typename T>
MultiframeGrad<T> multiframe_filter_backward(const Tensor<T>& mask, const Tensor<T>& mag,
                                             const Tensor<T>& d_out,
                                             TapOffsets rule = TapOffsets::current_and_past) {
  const std::size_t taps = mask.dim(0), frames = mag.dim(0), bins = mag.dim(1);
  MultiframeGrad<T> g{Tensor<T>(mask.shape()), Tensor<T>(mag.shape())};
  for (std::size_t tau = 0; tau < taps; ++tau) {
    const std::size_t off = tap_offset(rule, tau);
    for (std::size_t l = off; l < frames; ++l) {
      const T* m = &mask.at(tau, l, 0);
      const T* x = &mag.at(l - off, 0);
      const T* d = &d_out.at(l, 0);
      T* dm = &g.d_mask.at(tau, l, 0);
      T* dx = &g.d_mag.at(l - off, 0);
      for (std::size_t f = 0; f < bins; ++f) {
        dm[f] = d[f] * x[f];
        dx[f] += d[f] * m[f];
      }
    }
  }
  return g;
}

}  // namespace dmf::nn
