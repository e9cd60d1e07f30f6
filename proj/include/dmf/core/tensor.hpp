#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dmf/core/error.hpp"

namespace dmf {

// Dense row-major tensor. Rank is dynamic but every layer in this library
// works with rank 1..4; the conventional layouts are
//   [C][T][F]  channel x frame x frequency feature maps
//   [C][T]     per-frame vectors (S-TCM)
//   [T][F]     single spectrogram-shaped planes
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T{0})
      : shape_(std::move(shape)), data_(count(shape_), fill) {}

  Tensor(std::initializer_list<std::size_t> shape, T fill = T{0})
      : Tensor(std::vector<std::size_t>(shape), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    detail::require_shape(data_.size() == count(shape_),
                          "tensor data size does not match shape");
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  std::vector<T>& vec() noexcept { return data_; }
  const std::vector<T>& vec() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t a, std::size_t b) noexcept { return data_[a * shape_[1] + b]; }
  const T& at(std::size_t a, std::size_t b) const noexcept {
    return data_[a * shape_[1] + b];
  }
  T& at(std::size_t a, std::size_t b, std::size_t c) noexcept {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }
  const T& at(std::size_t a, std::size_t b, std::size_t c) const noexcept {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }

  /// Pointer to the contiguous block starting at leading index `a`.
  T* slab(std::size_t a) noexcept { return data_.data() + a * stride0(); }
  const T* slab(std::size_t a) const noexcept { return data_.data() + a * stride0(); }
  std::size_t stride0() const noexcept { return shape_.empty() ? 0 : data_.size() / shape_[0]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same storage, new shape with identical element count.
  Tensor reshaped(std::vector<std::size_t> shape) const& {
    detail::require_shape(count(shape) == data_.size(), "reshape changes element count");
    return Tensor(std::move(shape), data_);
  }
  Tensor reshaped(std::vector<std::size_t> shape) && {
    detail::require_shape(count(shape) == data_.size(), "reshape changes element count");
    return Tensor(std::move(shape), std::move(data_));
  }

  bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

  Tensor& operator+=(const Tensor& o) {
    detail::require_shape(same_shape(o), "tensor += with mismatched shapes");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

/// Stack rank-3 tensors with equal [T][F] along the channel axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_shape(a.rank() == b.rank() && a.rank() >= 2, "concat rank mismatch");
  for (std::size_t i = 1; i < a.rank(); ++i)
    detail::require_shape(a.dim(i) == b.dim(i), "concat: trailing dims differ " +
                                                    a.shape_string() + " " + b.shape_string());
  auto shape = a.shape();
  shape[0] += b.dim(0);
  Tensor<T> out(shape);
  std::copy(a.vec().begin(), a.vec().end(), out.vec().begin());
  std::copy(b.vec().begin(), b.vec().end(), out.vec().begin() + a.size());
  return out;
}

/// Inverse of concat_channels: split off the first `c0` channels.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::size_t c0) {
  detail::require_shape(c0 <= x.dim(0), "split_channels beyond channel count");
  auto sa = x.shape();
  auto sb = x.shape();
  sa[0] = c0;
  sb[0] = x.dim(0) - c0;
  Tensor<T> a(sa), b(sb);
  std::copy(x.vec().begin(), x.vec().begin() + a.size(), a.vec().begin());
  std::copy(x.vec().begin() + a.size(), x.vec().end(), b.vec().begin());
  return {std::move(a), std::move(b)};
}

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& x) {
  std::vector<To> d(x.vec().begin(), x.vec().end());
  return Tensor<To>(x.shape(), std::move(d));
}

}  // namespace dmf
