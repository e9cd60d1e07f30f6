#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "dmf/core/error.hpp"
#include "dmf/core/tensor.hpp"

namespace dmf::frontend {

using Complex = std::complex<double>;

/// Real [T][F] plane (magnitudes, phases, gains).
using Plane = Tensor<double>;

/// Time-frequency complex array, row-major [frames][bins].
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t frames, std::size_t bins)
      : frames_(frames), bins_(bins), values_(frames * bins) {}
  ComplexSpectrogram(std::size_t frames, std::size_t bins, std::vector<Complex> values)
      : frames_(frames), bins_(bins), values_(std::move(values)) {
    detail::require_shape(values_.size() == frames * bins, "spectrogram value count");
  }

  /// Couple a magnitude plane with a phase plane: values = mag * exp(j phase).
  static ComplexSpectrogram from_polar(const Plane& mag, const Plane& phase) {
    detail::require_shape(mag.same_shape(phase) && mag.rank() == 2,
                          "from_polar: magnitude/phase shapes differ");
    ComplexSpectrogram s(mag.dim(0), mag.dim(1));
    for (std::size_t i = 0; i < mag.size(); ++i) s.values_[i] = std::polar(mag[i], phase[i]);
    return s;
  }

  /// Build from real and imaginary planes.
  static ComplexSpectrogram from_ri(const Plane& re, const Plane& im) {
    detail::require_shape(re.same_shape(im) && re.rank() == 2, "from_ri: shapes differ");
    ComplexSpectrogram s(re.dim(0), re.dim(1));
    for (std::size_t i = 0; i < re.size(); ++i) s.values_[i] = {re[i], im[i]};
    return s;
  }

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t size() const noexcept { return values_.size(); }

  Complex& at(std::size_t t, std::size_t f) noexcept { return values_[t * bins_ + f]; }
  const Complex& at(std::size_t t, std::size_t f) const noexcept { return values_[t * bins_ + f]; }
  std::vector<Complex>& values() noexcept { return values_; }
  const std::vector<Complex>& values() const noexcept { return values_; }

  Plane magnitude() const {
    Plane m({frames_, bins_});
    for (std::size_t i = 0; i < values_.size(); ++i) m[i] = std::abs(values_[i]);
    return m;
  }

  /// Phase in (-pi, pi]; zero where the value is exactly zero.
  Plane phase() const {
    Plane p({frames_, bins_});
    for (std::size_t i = 0; i < values_.size(); ++i) p[i] = std::arg(values_[i]);
    return p;
  }

  Plane real() const {
    Plane p({frames_, bins_});
    for (std::size_t i = 0; i < values_.size(); ++i) p[i] = values_[i].real();
    return p;
  }

  Plane imag() const {
    Plane p({frames_, bins_});
    for (std::size_t i = 0; i < values_.size(); ++i) p[i] = values_[i].imag();
    return p;
  }

  double energy() const noexcept {
    double e = 0.0;
    for (const auto& v : values_) e += std::norm(v);
    return e;
  }

  /// Contiguous bin slice [first, last] over every frame.
  ComplexSpectrogram slice_bins(std::size_t first, std::size_t last) const {
    detail::require_shape(first <= last && last < bins_, "slice_bins out of range");
    const std::size_t w = last - first + 1;
    ComplexSpectrogram s(frames_, w);
    for (std::size_t t = 0; t < frames_; ++t)
      for (std::size_t f = 0; f < w; ++f) s.at(t, f) = at(t, first + f);
    return s;
  }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<Complex> values_;
};

/// Bin slice of a real plane.
inline Plane slice_plane(const Plane& p, std::size_t first, std::size_t last) {
  detail::require_shape(p.rank() == 2 && first <= last && last < p.dim(1),
                        "slice_plane out of range");
  const std::size_t w = last - first + 1;
  Plane s({p.dim(0), w});
  for (std::size_t t = 0; t < p.dim(0); ++t)
    for (std::size_t f = 0; f < w; ++f) s.at(t, f) = p.at(t, first + f);
  return s;
}

}  // namespace dmf::frontend
