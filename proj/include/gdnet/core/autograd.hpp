#pragma once

#include <functional>

#include "gdnet/core/tensor.hpp"

namespace gdnet::core {

/// Reverse pass from a scalar. Each reachable node is visited once in reverse
/// topological order; leaf gradients accumulate across calls, intermediate
/// gradients are recomputed from scratch.
template <typename T>
void backward(const Tensor<T>& loss);

/// Central-difference gradient of a scalar function at x:
/// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every element.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, T eps);

}  // namespace gdnet::core
