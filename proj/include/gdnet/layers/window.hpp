#pragma once

#include <memory>

#include "gdnet/core/ops.hpp"

namespace gdnet::layers {

/// Tokens of N feature maps tiled into windows: (N * numWindows) x tokens x C,
/// window index fastest within each image.
template <typename T>
struct WindowBatch {
  core::Tensor<T> windows;
  std::int64_t batch = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  int window = 0;  // query-grid stride M
  int extent = 0;  // tokens per side (M, or the overlapped size)
  int shift = 0;

  std::int64_t windows_per_image() const { return (height / window) * (width / window); }
};

/// x is channels-last N x H x W x C. Cyclic shift by (-shift, -shift), then
/// tiles into non-overlapping M x M windows.
template <typename T>
WindowBatch<T> window_partition(const core::Tensor<T>& x, int window, int shift);

/// Channels-first convenience: N x C x H x W input.
template <typename T>
WindowBatch<T> window_partition_nchw(const core::Tensor<T>& x, int window, int shift);

/// Exact inverse of window_partition, including the un-shift. Returns
/// N x H x W x C.
template <typename T>
core::Tensor<T> window_reverse(const WindowBatch<T>& wb);

/// Windows of `extent` x `extent` tokens centred on each M x M query window;
/// out-of-image tokens read as zero. extent == window reduces to a plain
/// partition.
template <typename T>
WindowBatch<T> overlap_partition(const core::Tensor<T>& x, int window, int extent);

/// Key/value side length for overlap ratio beta: (1 + beta) * M, which must
/// be an integer with the same parity as M.
int overlapped_extent(int window, double overlap_ratio);

/// Mask that keeps shifted-window attention inside regions that were
/// contiguous before the cyclic shift. Null when shift is 0.
std::shared_ptr<const core::AttentionMask> shift_mask(std::int64_t height, std::int64_t width, int window, int shift);

}  // namespace gdnet::layers
