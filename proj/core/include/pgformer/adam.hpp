// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "pgformer/autodiff.hpp"

namespace pgformer {

struct AdamConfig {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over every trainable parameter of a store.
class Adam {
 public:
  Adam(ParameterStore& store, AdamConfig config = {});

  void step();
  void set_learning_rate(double lr) noexcept { config_.learning_rate = lr; }
  double learning_rate() const noexcept { return config_.learning_rate; }
  long steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

  const Tensor& first_moment(std::size_t i) const { return first_[i]; }
  const Tensor& second_moment(std::size_t i) const { return second_[i]; }

 private:
  ParameterStore* store_;
  AdamConfig config_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  long steps_ = 0;
};

}  // namespace pgformer
