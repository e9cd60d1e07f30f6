#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dmf/core/tensor.hpp"

namespace dmf::nn {

/// A trainable tensor with its accumulated gradient.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> shape, T fill = T{0})
      : name(std::move(n)), value(shape, fill), grad(shape) {}

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad() { grad.fill(T{0}); }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

template <typename T>
using ConstParamList = std::vector<const Param<T>*>;

using Rng = std::mt19937_64;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
template <typename T>
void init_fan_in(Param<T>& p, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : p.value.vec()) v = static_cast<T>(u(rng));
}

template <typename T>
std::size_t count_parameters(const ConstParamList<T>& ps) {
  std::size_t n = 0;
  for (const auto* p : ps) n += p->size();
  return n;
}

}  // namespace dmf::nn
