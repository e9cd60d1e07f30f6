#pragma once

#include <stdexcept>
#include <string>

namespace dmf {

// Error taxonomy shared by every module. All derive from std::runtime_error so
// callers that don't care about the category can catch one type.

/// Tensor/spectrogram dimensions disagree with what an operation expects.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A value lies outside the mathematical domain of an operation.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input data is unusable (empty, non-finite, wrong format).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Configuration is inconsistent or unsupported.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training hit a non-finite loss.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string dims(std::size_t a, std::size_t b) {
  return std::to_string(a) + " vs " + std::to_string(b);
}

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace detail
}  // namespace dmf
