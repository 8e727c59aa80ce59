#include "gdnet/layers/module.hpp"

#include <cmath>

namespace gdnet::layers {

template <typename T>
Parameter<T>& truncated_normal_param(ParameterStore<T>& store, const std::string& name, const Shape& shape,
                                     double stddev, const SeededRng& rng) {
  SeededRng r = rng.fork(name);
  std::vector<T> v(static_cast<std::size_t>(core::numel_of(shape)));
  for (auto& x : v) x = static_cast<T>(r.truncated_normal(stddev));
  return store.add(name, shape, std::move(v));
}

template <typename T>
Parameter<T>& normal_param(ParameterStore<T>& store, const std::string& name, const Shape& shape, double stddev,
                           const SeededRng& rng) {
  SeededRng r = rng.fork(name);
  std::vector<T> v(static_cast<std::size_t>(core::numel_of(shape)));
  for (auto& x : v) x = static_cast<T>(r.normal(0.0, stddev));
  return store.add(name, shape, std::move(v));
}

template <typename T>
Parameter<T>& constant_param(ParameterStore<T>& store, const std::string& name, const Shape& shape, T value) {
  return store.add(name, shape, std::vector<T>(static_cast<std::size_t>(core::numel_of(shape)), value));
}

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& prefix, int in, int out, const SeededRng& rng,
                  bool with_bias) {
  weight = &truncated_normal_param<T>(store, prefix + "weight", {out, in}, kAffineInitStd, rng);
  if (with_bias) bias = &constant_param<T>(store, prefix + "bias", {out}, T(0));
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
  return core::linear(x, weight->value, bias ? bias->value : Tensor<T>());
}

template <typename T>
Conv2d<T>::Conv2d(ParameterStore<T>& store, const std::string& prefix, int in, int out, int kernel, int stride_,
                  const SeededRng& rng)
    : stride(stride_), pad(kernel / 2) {
  const double fan_in = static_cast<double>(in) * kernel * kernel;
  const double gain = 2.0 / (1.0 + core::kLeakySlope * core::kLeakySlope);
  weight = &normal_param<T>(store, prefix + "weight", {out, in, kernel, kernel}, std::sqrt(gain / fan_in), rng);
  bias = &constant_param<T>(store, prefix + "bias", {out}, T(0));
}

template <typename T>
Tensor<T> Conv2d<T>::operator()(const Tensor<T>& x) const {
  return core::conv2d(x, weight->value, bias->value, stride, pad);
}

template <typename T>
LayerNorm<T>::LayerNorm(ParameterStore<T>& store, const std::string& prefix, int dim) {
  gamma = &constant_param<T>(store, prefix + "gamma", {dim}, T(1));
  beta = &constant_param<T>(store, prefix + "beta", {dim}, T(0));
}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
  return core::layer_norm(x, gamma->value, beta->value);
}

template <typename T>
Mlp<T>::Mlp(ParameterStore<T>& store, const std::string& prefix, int dim, const SeededRng& rng)
    : fc1(store, prefix + "fc1.", dim, dim * kMlpRatio, rng), fc2(store, prefix + "fc2.", dim * kMlpRatio, dim, rng) {}

template <typename T>
Tensor<T> Mlp<T>::operator()(const Tensor<T>& x) const {
  return fc2(core::gelu(fc1(x)));
}

#define GDNET_INSTANTIATE(T)                                                                                   \
  template Parameter<T>& truncated_normal_param(ParameterStore<T>&, const std::string&, const Shape&, double, \
                                                const SeededRng&);                                             \
  template Parameter<T>& normal_param(ParameterStore<T>&, const std::string&, const Shape&, double,           \
                                      const SeededRng&);                                                       \
  template Parameter<T>& constant_param(ParameterStore<T>&, const std::string&, const Shape&, T);             \
  template class Linear<T>;                                                                                    \
  template class Conv2d<T>;                                                                                    \
  template class LayerNorm<T>;                                                                                 \
  template class Mlp<T>;
GDNET_INSTANTIATE(float)
GDNET_INSTANTIATE(double)
#undef GDNET_INSTANTIATE

}  // namespace gdnet::layers
