#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gdnet/core/parameter.hpp"

namespace gdnet::train {

using core::Parameter;
using core::ParameterStore;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// Parameters sharing one base learning rate.
template <typename T>
struct ParamGroup {
  std::vector<Parameter<T>*> params;
  double lr = 1e-4;
};

/// Adam with bias-corrected moments. Moments are keyed by parameter name and
/// created when a group is registered.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<ParamGroup<T>> groups, AdamConfig cfg = {});

  /// One update of every registered parameter at group lr * `lr_factor`,
  /// then zeroes their gradients. Parameters without a gradient count as
  /// having a zero gradient.
  void step(double lr_factor = 1.0);
  /// Update of a single parameter at an explicit learning rate using the
  /// current step count; throws ContractError when it has no moments.
  void update(Parameter<T>& p, double lr);

  std::int64_t steps() const { return step_; }
  const std::vector<ParamGroup<T>>& groups() const { return groups_; }
  const std::vector<double>& first_moment(const std::string& name) const;
  const std::vector<double>& second_moment(const std::string& name) const;

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  const Moments& moments(const std::string& name) const;

  std::vector<ParamGroup<T>> groups_;
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::unordered_map<std::string, Moments> state_;
};

inline constexpr int kHalvingEpochs = 200;

/// base_lr * 0.5^floor(epoch / 200).
double lr_at_epoch(double base_lr, double epoch);

/// Marks parameters whose name starts with any pattern trainable and freezes
/// the rest. An empty pattern list makes everything trainable. Throws
/// ConfigError naming a pattern that matches nothing. Returns the number of
/// trainable parameters.
template <typename T>
std::size_t set_trainable(ParameterStore<T>& store, const std::vector<std::string>& patterns);

/// FNV-1a over the raw bytes of every parameter under `prefix`, in
/// registration order.
template <typename T>
std::uint64_t checksum(const ParameterStore<T>& store, const std::string& prefix = "");

}  // namespace gdnet::train
