#pragma once

#include <array>

#include "dmf/frontend/config.hpp"
#include "dmf/frontend/spectrogram.hpp"

namespace dmf::frontend {

template <typename Band>
struct SubBands {
  Band low;
  Band mid;
  Band high;
};

inline SubBands<ComplexSpectrogram> split_bands(const ComplexSpectrogram& spec,
                                                const BandLayout& layout) {
  layout.validate(spec.bins());
  return {spec.slice_bins(layout.low.first, layout.low.last),
          spec.slice_bins(layout.mid.first, layout.mid.last),
          spec.slice_bins(layout.high.first, layout.high.last)};
}

/// Same split applied to a real [T][F] plane (magnitudes or phases).
inline SubBands<Plane> split_bands(const Plane& plane, const BandLayout& layout) {
  detail::require_shape(plane.rank() == 2, "split_bands expects a [T][F] plane");
  layout.validate(plane.dim(1));
  return {slice_plane(plane, layout.low.first, layout.low.last),
          slice_plane(plane, layout.mid.first, layout.mid.last),
          slice_plane(plane, layout.high.first, layout.high.last)};
}

/// Stack the bands along frequency; bins covered by two bands get the
/// arithmetic mean of both (complex) values.
inline ComplexSpectrogram fuse_bands(const ComplexSpectrogram& low, const ComplexSpectrogram& mid,
                                     const ComplexSpectrogram& high, const BandLayout& layout) {
  const std::size_t bins = layout.total_bins();
  layout.validate(bins);
  if (low.frames() != mid.frames() || low.frames() != high.frames())
    throw ShapeError("fuse_bands: frame counts differ");
  const std::array<const ComplexSpectrogram*, 3> bands{&low, &mid, &high};
  const std::array<BinRange, 3> ranges{layout.low, layout.mid, layout.high};
  for (int b = 0; b < 3; ++b)
    if (bands[b]->bins() != ranges[b].size())
      throw ShapeError("fuse_bands: band " + std::to_string(b) + " has " +
                       std::to_string(bands[b]->bins()) + " bins, layout expects " +
                       std::to_string(ranges[b].size()));

  ComplexSpectrogram out(low.frames(), bins);
  for (int b = 0; b < 3; ++b) {
    const auto& r = ranges[b];
    for (std::size_t k = r.first; k <= r.last; ++k) {
      const double w = layout.fusion_weight(b, k);
      for (std::size_t t = 0; t < out.frames(); ++t) out.at(t, k) += w * bands[b]->at(t, k - r.first);
    }
  }
  return out;
}

}  // namespace dmf::frontend
