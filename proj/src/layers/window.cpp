#include "gdnet/layers/window.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace gdnet::layers {

namespace {

using Index = std::shared_ptr<const std::vector<std::int64_t>>;

void check_grid(std::int64_t h, std::int64_t w, int window, int shift) {
  if (window <= 0 || h % window || w % window)
    throw ContractError("window " + std::to_string(window) + " does not divide feature map " + std::to_string(h) +
                        "x" + std::to_string(w));
  if (shift < 0 || shift >= window) throw ContractError("window shift must lie in [0, window)");
}

// Index maps depend only on geometry; cache them so repeated layers share one.
template <typename Key, typename Make>
Index cached(std::map<Key, Index>& cache, std::mutex& mu, const Key& key, Make make) {
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Index idx = make();
  cache.emplace(key, idx);
  return idx;
}

using GeomKey = std::tuple<std::int64_t, std::int64_t, std::int64_t, int, int>;

Index partition_index(std::int64_t n, std::int64_t h, std::int64_t w, int m, int extent, int shift) {
  static std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t, int, int, int>, Index> cache;
  static std::mutex mu;
  return cached(cache, mu, std::make_tuple(n, h, w, m, extent, shift), [&] {
    const int pad = (extent - m) / 2;
    const std::int64_t wy_n = h / m, wx_n = w / m;
    auto idx = std::make_shared<std::vector<std::int64_t>>();
    idx->reserve(static_cast<std::size_t>(n * wy_n * wx_n * extent * extent));
    for (std::int64_t in = 0; in < n; ++in)
      for (std::int64_t wy = 0; wy < wy_n; ++wy)
        for (std::int64_t wx = 0; wx < wx_n; ++wx)
          for (int ty = 0; ty < extent; ++ty)
            for (int tx = 0; tx < extent; ++tx) {
              std::int64_t y = wy * m - pad + ty, x = wx * m - pad + tx;
              if (extent == m) {
                y = (y + shift) % h;
                x = (x + shift) % w;
              } else if (y < 0 || y >= h || x < 0 || x >= w) {
                idx->push_back(-1);
                continue;
              }
              idx->push_back((in * h + y) * w + x);
            }
    return Index(idx);
  });
}

Index reverse_index(std::int64_t n, std::int64_t h, std::int64_t w, int m, int shift) {
  static std::map<GeomKey, Index> cache;
  static std::mutex mu;
  return cached(cache, mu, GeomKey{n, h, w, m, shift}, [&] {
    const std::int64_t wx_n = w / m, per_image = (h / m) * wx_n;
    auto idx = std::make_shared<std::vector<std::int64_t>>();
    idx->reserve(static_cast<std::size_t>(n * h * w));
    for (std::int64_t in = 0; in < n; ++in)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
          const std::int64_t ys = ((y - shift) % h + h) % h, xs = ((x - shift) % w + w) % w;
          const std::int64_t win = in * per_image + (ys / m) * wx_n + xs / m;
          idx->push_back(win * m * m + (ys % m) * m + xs % m);
        }
    return Index(idx);
  });
}

}  // namespace

template <typename T>
WindowBatch<T> window_partition(const core::Tensor<T>& x, int window, int shift) {
  if (x.rank() != 4) throw ContractError("window_partition expects N x H x W x C, got " + core::shape_str(x.shape()));
  const auto n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  check_grid(h, w, window, shift);
  WindowBatch<T> wb{{}, n, h, w, window, window, shift};
  const std::int64_t count = n * wb.windows_per_image();
  wb.windows = core::gather_rows(x, partition_index(n, h, w, window, window, shift),
                                 {count, static_cast<std::int64_t>(window) * window, c});
  return wb;
}

template <typename T>
WindowBatch<T> window_partition_nchw(const core::Tensor<T>& x, int window, int shift) {
  return window_partition(core::to_channels_last(x), window, shift);
}

template <typename T>
core::Tensor<T> window_reverse(const WindowBatch<T>& wb) {
  const auto& t = wb.windows;
  if (wb.extent != wb.window) throw ContractError("window_reverse: overlapped windows cannot be reversed");
  check_grid(wb.height, wb.width, wb.window, wb.shift);
  if (t.rank() != 3 || t.dim(0) != wb.batch * wb.windows_per_image() || t.dim(1) != wb.window * wb.window)
    throw ContractError("window_reverse: windows " + core::shape_str(t.shape()) + " do not match metadata");
  return core::gather_rows(t, reverse_index(wb.batch, wb.height, wb.width, wb.window, wb.shift),
                           {wb.batch, wb.height, wb.width, t.dim(2)});
}

template <typename T>
WindowBatch<T> overlap_partition(const core::Tensor<T>& x, int window, int extent) {
  if (x.rank() != 4) throw ContractError("overlap_partition expects N x H x W x C, got " + core::shape_str(x.shape()));
  if (extent < window || (extent - window) % 2)
    throw ContractError("overlap extent must be >= window with matching parity");
  const auto n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  check_grid(h, w, window, 0);
  WindowBatch<T> wb{{}, n, h, w, window, extent, 0};
  wb.windows = core::gather_rows(x, partition_index(n, h, w, window, extent, 0),
                                 {n * wb.windows_per_image(), static_cast<std::int64_t>(extent) * extent, c});
  return wb;
}

int overlapped_extent(int window, double overlap_ratio) {
  const double e = (1.0 + overlap_ratio) * window;
  const long r = std::lround(e);
  if (overlap_ratio < 0 || std::fabs(e - static_cast<double>(r)) > 1e-9 || (r - window) % 2)
    throw ContractError("overlap ratio " + std::to_string(overlap_ratio) + " gives a non-integral window " +
                        std::to_string(e) + " for M=" + std::to_string(window));
  return static_cast<int>(r);
}

std::shared_ptr<const core::AttentionMask> shift_mask(std::int64_t height, std::int64_t width, int window, int shift) {
  if (shift == 0) return nullptr;
  check_grid(height, width, window, shift);
  static std::map<GeomKey, std::shared_ptr<const core::AttentionMask>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const GeomKey key{0, height, width, window, shift};
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const std::int64_t wy_n = height / window, wx_n = width / window, tokens = window * window;
  auto mask = std::make_shared<core::AttentionMask>();
  mask->groups = wy_n * wx_n;
  mask->rows = mask->cols = tokens;
  mask->allowed.resize(static_cast<std::size_t>(mask->groups * tokens * tokens));
  std::vector<int> label(static_cast<std::size_t>(tokens));
  for (std::int64_t wy = 0; wy < wy_n; ++wy)
    for (std::int64_t wx = 0; wx < wx_n; ++wx) {
      // a token wrapped around an edge belongs to a different region
      for (int ty = 0; ty < window; ++ty)
        for (int tx = 0; tx < window; ++tx) {
          const bool wrap_y = wy * window + ty >= height - shift;
          const bool wrap_x = wx * window + tx >= width - shift;
          label[static_cast<std::size_t>(ty * window + tx)] = (wrap_y ? 2 : 0) + (wrap_x ? 1 : 0);
        }
      const std::int64_t g = wy * wx_n + wx;
      for (std::int64_t i = 0; i < tokens; ++i)
        for (std::int64_t j = 0; j < tokens; ++j)
          mask->allowed[static_cast<std::size_t>((g * tokens + i) * tokens + j)] =
              label[static_cast<std::size_t>(i)] == label[static_cast<std::size_t>(j)];
    }
  cache.emplace(key, mask);
  return mask;
}

#define GDNET_INSTANTIATE(T)                                                         \
  template WindowBatch<T> window_partition(const core::Tensor<T>&, int, int);        \
  template WindowBatch<T> window_partition_nchw(const core::Tensor<T>&, int, int);   \
  template core::Tensor<T> window_reverse(const WindowBatch<T>&);                    \
  template WindowBatch<T> overlap_partition(const core::Tensor<T>&, int, int);
GDNET_INSTANTIATE(float)
GDNET_INSTANTIATE(double)
#undef GDNET_INSTANTIATE

}  // namespace gdnet::layers
