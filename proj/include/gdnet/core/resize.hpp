#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gdnet/core/tensor.hpp"

namespace gdnet::core {

/// Keys cubic convolution kernel, a = -0.5.
double keys_cubic(double x);

/// Bicubic resampling of an h x w plane to oh x ow. When shrinking, the kernel
/// is stretched by the inverse scale (antialiasing); weights are normalized
/// and borders reflect symmetrically, so constant planes stay constant.
std::vector<double> resize_plane(std::span<const double> src, std::int64_t h, std::int64_t w, std::int64_t oh,
                                 std::int64_t ow);

/// Resizes the last two dims by `scale` (output dims rounded). Not recorded
/// on the tape.
template <typename T>
Tensor<T> bicubic_resize(const Tensor<T>& img, double scale);

}  // namespace gdnet::core
