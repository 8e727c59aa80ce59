#pragma once

#include <string>

#include "gdnet/core/ops.hpp"
#include "gdnet/core/parameter.hpp"
#include "gdnet/core/rng.hpp"

namespace gdnet::layers {

using core::Parameter;
using core::ParameterStore;
using core::SeededRng;
using core::Shape;
using core::Tensor;

inline constexpr double kAffineInitStd = 0.02;

/// Every parameter draws from its own stream keyed by its full name, so
/// initial values do not depend on construction order.
template <typename T>
Parameter<T>& truncated_normal_param(ParameterStore<T>& store, const std::string& name, const Shape& shape,
                                     double stddev, const SeededRng& rng);
template <typename T>
Parameter<T>& normal_param(ParameterStore<T>& store, const std::string& name, const Shape& shape, double stddev,
                           const SeededRng& rng);
template <typename T>
Parameter<T>& constant_param(ParameterStore<T>& store, const std::string& name, const Shape& shape, T value);

/// y = x W^T + b over the last dim.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& prefix, int in, int out, const SeededRng& rng,
         bool bias = true);
  Tensor<T> operator()(const Tensor<T>& x) const;

  Parameter<T>* weight = nullptr;
  Parameter<T>* bias = nullptr;
};

/// Square-kernel NCHW convolution, He-style fan-in init for the leaky slope.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore<T>& store, const std::string& prefix, int in, int out, int kernel, int stride,
         const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;

  Parameter<T>* weight = nullptr;
  Parameter<T>* bias = nullptr;
  int stride = 1;
  int pad = 0;
};

template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& store, const std::string& prefix, int dim);
  Tensor<T> operator()(const Tensor<T>& x) const;

  Parameter<T>* gamma = nullptr;
  Parameter<T>* beta = nullptr;
};

inline constexpr int kMlpRatio = 2;

/// C -> 2C -> GELU -> C.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore<T>& store, const std::string& prefix, int dim, const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;

  Linear<T> fc1;
  Linear<T> fc2;
};

}  // namespace gdnet::layers
