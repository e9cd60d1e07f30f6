#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "dmf/core/error.hpp"

namespace dmf::frontend {

// Real FFT of arbitrary length backed by FFTW. Plans are created once per
// (size, direction) under a lock; execution uses the new-array interface,
// which FFTW documents as thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n == 0) throw ConfigError("FFT size must be positive");
    std::lock_guard lock(planner_mutex());
    auto& cache = plans();
    auto it = cache.find(n);
    if (it == cache.end()) {
      std::vector<double> in(n);
      std::vector<fftw_complex> out(n / 2 + 1);
      const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT;
      Plans p;
      p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(), flags);
      // c2r always destroys its input; callers pass a scratch copy.
      p.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), out.data(), in.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
      it = cache.emplace(n, p).first;
    }
    plans_ = it->second;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// Unnormalised forward transform: out[k] = sum_n in[n] e^{-2 pi i k n / N}.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    if (in.size() != n_ || out.size() != bins()) throw ShapeError("RealFft::forward size");
    fftw_execute_dft_r2c(plans_.forward, const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  /// Inverse transform normalised by 1/N.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
    if (in.size() != bins() || out.size() != n_) throw ShapeError("RealFft::inverse size");
    std::vector<std::complex<double>> scratch(in.begin(), in.end());
    fftw_execute_dft_c2r(plans_.inverse, reinterpret_cast<fftw_complex*>(scratch.data()),
                         out.data());
    const double s = 1.0 / static_cast<double>(n_);
    for (double& v : out) v *= s;
  }

 private:
  struct Plans {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
  };

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
  static std::map<std::size_t, Plans>& plans() {
    static std::map<std::size_t, Plans> cache;
    return cache;
  }

  std::size_t n_;
  Plans plans_;
};

}  // namespace dmf::frontend
