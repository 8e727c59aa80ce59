#pragma once

#include "gdnet/core/tensor.hpp"

namespace gdnet::train {

using core::Tensor;

/// Mean absolute difference over every element. The gradient with respect
/// to `out` is sign(out - gt) / M with sign(0) = 0.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& out, const Tensor<T>& gt);

}  // namespace gdnet::train
