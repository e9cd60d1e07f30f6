#pragma once

#include <cmath>

#include "dmf/frontend/spectrogram.hpp"

namespace dmf::frontend {

inline void check_beta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("compression exponent must lie in (0, 1]");
}

/// Elementwise mag^beta. Only magnitudes pass through here; phase is kept aside.
inline Plane compress_magnitude(const Plane& mag, double beta) {
  check_beta(beta);
  Plane out(mag.shape());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (!(mag[i] >= 0.0)) throw DomainError("compress_magnitude: negative or NaN magnitude");
    out[i] = std::pow(mag[i], beta);
  }
  return out;
}

inline Plane decompress_magnitude(const Plane& mag, double beta) {
  check_beta(beta);
  Plane out(mag.shape());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (!(mag[i] >= 0.0)) throw DomainError("decompress_magnitude: negative or NaN magnitude");
    out[i] = std::pow(mag[i], 1.0 / beta);
  }
  return out;
}

/// Magnitude/phase pair of a spectrogram with the magnitude power-compressed.
struct CompressedSpectrum {
  Plane mag;
  Plane phase;

  ComplexSpectrogram coupled() const { return ComplexSpectrogram::from_polar(mag, phase); }
};

inline CompressedSpectrum compress(const ComplexSpectrogram& spec, double beta) {
  return {compress_magnitude(spec.magnitude(), beta), spec.phase()};
}

/// Undo compression of a complex spectrum: |Y|^(1/beta) with Y's phase.
inline ComplexSpectrogram decompress(const ComplexSpectrogram& spec, double beta) {
  return ComplexSpectrogram::from_polar(decompress_magnitude(spec.magnitude(), beta),
                                        spec.phase());
}

}  // namespace dmf::frontend
