#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "gdnet/core/tensor.hpp"

namespace gdnet::core::detail {

// Index bookkeeping for same-rank broadcasting.
struct BroadcastPlan {
  Shape out;
  std::vector<std::int64_t> stride_a;
  std::vector<std::int64_t> stride_b;
  bool same = false;

  BroadcastPlan(const Shape& a, const Shape& b, const char* op) {
    if (a.size() != b.size())
      throw ContractError(std::string(op) + ": rank mismatch " + shape_str(a) + " vs " + shape_str(b));
    same = (a == b);
    const std::size_t r = a.size();
    out.resize(r);
    stride_a.assign(r, 0);
    stride_b.assign(r, 0);
    for (std::size_t i = 0; i < r; ++i) {
      if (a[i] != b[i] && a[i] != 1 && b[i] != 1)
        throw ContractError(std::string(op) + ": cannot broadcast " + shape_str(a) + " with " +
                            shape_str(b) + " at dim " + std::to_string(i));
      out[i] = std::max(a[i], b[i]);
    }
    std::int64_t sa = 1, sb = 1;
    for (std::size_t i = r; i-- > 0;) {
      stride_a[i] = a[i] == 1 ? 0 : sa;
      stride_b[i] = b[i] == 1 ? 0 : sb;
      sa *= a[i];
      sb *= b[i];
    }
  }

  // fn(out_index, a_index, b_index) in row-major output order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const std::int64_t total = numel_of(out);
    if (same) {
      for (std::int64_t i = 0; i < total; ++i) fn(i, i, i);
      return;
    }
    const std::size_t r = out.size();
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t ia = 0, ib = 0;
    const std::int64_t inner = out[r - 1];
    const std::int64_t ia_step = stride_a[r - 1], ib_step = stride_b[r - 1];
    for (std::int64_t o = 0; o < total; o += inner) {
      for (std::int64_t j = 0; j < inner; ++j) fn(o + j, ia + j * ia_step, ib + j * ib_step);
      // advance the outer multi-index
      for (std::size_t d = r - 1; d-- > 0;) {
        ++idx[d];
        ia += stride_a[d];
        ib += stride_b[d];
        if (idx[d] < out[d]) break;
        ia -= stride_a[d] * out[d];
        ib -= stride_b[d] * out[d];
        idx[d] = 0;
      }
    }
  }
};

}  // namespace gdnet::core::detail
