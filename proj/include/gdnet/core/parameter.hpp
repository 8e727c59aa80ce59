#pragma once

#include <deque>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gdnet/core/tensor.hpp"

namespace gdnet::core {

/// Named, optionally trainable leaf. The gradient lives on the value's node.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;

  bool trainable() const { return value.requires_grad(); }
  void set_trainable(bool flag) { value.set_requires_grad(flag); }
  std::span<const T> grad() const { return value.grad(); }
  void zero_grad() { value.zero_grad(); }
  const Shape& shape() const { return value.shape(); }
};

/// Owns every parameter of a model under hierarchical dotted names
/// ("mogm.rmag0.stl1.attn.qkv.weight"). Addresses stay stable for the store's
/// lifetime; iteration follows registration order.
template <typename T>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Parameter<T>& add(const std::string& name, const Shape& shape, std::vector<T> init) {
    if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
    params_.push_back(Parameter<T>{name, Tensor<T>::leaf(shape, std::move(init), true)});
    index_.emplace(name, params_.size() - 1);
    return params_.back();
  }

  Parameter<T>* find(std::string_view name) {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &params_[it->second];
  }
  const Parameter<T>* find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &params_[it->second];
  }

  std::vector<Parameter<T>*> all() {
    std::vector<Parameter<T>*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }
  std::vector<const Parameter<T>*> all() const {
    std::vector<const Parameter<T>*> out;
    for (const auto& p : params_) out.push_back(&p);
    return out;
  }
  std::vector<Parameter<T>*> with_prefix(std::string_view prefix) {
    std::vector<Parameter<T>*> out;
    for (auto& p : params_)
      if (p.name.compare(0, prefix.size(), prefix) == 0) out.push_back(&p);
    return out;
  }

  std::size_t size() const { return params_.size(); }
  std::int64_t element_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
  }
  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

 private:
  std::deque<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace gdnet::core
