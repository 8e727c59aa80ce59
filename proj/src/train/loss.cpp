#include "gdnet/train/loss.hpp"

#include <cmath>

#include "gdnet/core/error.hpp"

namespace gdnet::train {

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& out, const Tensor<T>& gt) {
  if (out.shape() != gt.shape())
    throw ContractError("l1_loss: shapes " + core::shape_str(out.shape()) + " and " + core::shape_str(gt.shape()) +
                        " differ");
  const auto a = out.data();
  const auto b = gt.data();
  const auto m = static_cast<double>(a.size());
  double total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  auto na = out.node(), nb = gt.node();
  return core::make_result<T>(
      {1}, {static_cast<T>(total / m)}, {na, nb},
      [na, nb, m](core::detail::Node<T>& self) {
        const T g = self.grad[0] / static_cast<T>(m);
        for (std::size_t i = 0; i < na->data.size(); ++i) {
          const T d = na->data[i] - nb->data[i];
          const T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
          if (na->requires_grad) {
            na->ensure_grad();
            na->grad[i] += s;
          }
          if (nb->requires_grad) {
            nb->ensure_grad();
            nb->grad[i] -= s;
          }
        }
      },
      "l1_loss");
}

template Tensor<float> l1_loss(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> l1_loss(const Tensor<double>&, const Tensor<double>&);

}  // namespace gdnet::train
