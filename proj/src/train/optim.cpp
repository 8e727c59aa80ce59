#include "gdnet/train/optim.hpp"

#include <cmath>
#include <cstring>

#include "gdnet/core/error.hpp"

namespace gdnet::train {

template <typename T>
Adam<T>::Adam(std::vector<ParamGroup<T>> groups, AdamConfig cfg) : groups_(std::move(groups)), cfg_(cfg) {
  for (const auto& g : groups_)
    for (const auto* p : g.params) {
      const auto n = static_cast<std::size_t>(p->value.numel());
      if (!state_.emplace(p->name, Moments{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}).second)
        throw ContractError("adam: parameter '" + p->name + "' registered twice");
    }
}

template <typename T>
void Adam<T>::step(double lr_factor) {
  ++step_;
  for (auto& g : groups_)
    for (auto* p : g.params) {
      update(*p, g.lr * lr_factor);
      p->zero_grad();
    }
}

template <typename T>
void Adam<T>::update(Parameter<T>& p, double lr) {
  auto it = state_.find(p.name);
  if (it == state_.end()) throw ContractError("adam: no optimizer state for '" + p.name + "'");
  if (step_ == 0) throw ContractError("adam: update before the first step");
  auto& st = it->second;
  const auto grad = p.grad();
  auto value = p.value.mutable_data();
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double gi = grad.empty() ? 0.0 : static_cast<double>(grad[i]);
    st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * gi;
    st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * gi * gi;
    const double m_hat = st.m[i] / c1, v_hat = st.v[i] / c2;
    value[i] = static_cast<T>(static_cast<double>(value[i]) - lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
  }
}

template <typename T>
const typename Adam<T>::Moments& Adam<T>::moments(const std::string& name) const {
  auto it = state_.find(name);
  if (it == state_.end()) throw ContractError("adam: no optimizer state for '" + name + "'");
  return it->second;
}

template <typename T>
const std::vector<double>& Adam<T>::first_moment(const std::string& name) const {
  return moments(name).m;
}

template <typename T>
const std::vector<double>& Adam<T>::second_moment(const std::string& name) const {
  return moments(name).v;
}

double lr_at_epoch(double base_lr, double epoch) {
  if (epoch < 0) throw ContractError("lr_at_epoch: epoch must be non-negative");
  return base_lr * std::pow(0.5, std::floor(epoch / kHalvingEpochs));
}

template <typename T>
std::size_t set_trainable(ParameterStore<T>& store, const std::vector<std::string>& patterns) {
  for (const auto& pat : patterns)
    if (store.with_prefix(pat).empty()) throw ConfigError("trainable pattern '" + pat + "' matches no parameter");
  std::size_t count = 0;
  for (auto* p : store.all()) {
    bool on = patterns.empty();
    for (const auto& pat : patterns) on = on || p->name.compare(0, pat.size(), pat) == 0;
    p->set_trainable(on);
    count += on ? 1 : 0;
  }
  return count;
}

template <typename T>
std::uint64_t checksum(const ParameterStore<T>& store, const std::string& prefix) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto* p : store.all()) {
    if (p->name.compare(0, prefix.size(), prefix) != 0) continue;
    mix(p->name.data(), p->name.size());
    const auto d = p->value.data();
    mix(d.data(), d.size_bytes());
  }
  return h;
}

template class Adam<float>;
template class Adam<double>;
template std::size_t set_trainable(ParameterStore<float>&, const std::vector<std::string>&);
template std::size_t set_trainable(ParameterStore<double>&, const std::vector<std::string>&);
template std::uint64_t checksum(const ParameterStore<float>&, const std::string&);
template std::uint64_t checksum(const ParameterStore<double>&, const std::string&);

}  // namespace gdnet::train
