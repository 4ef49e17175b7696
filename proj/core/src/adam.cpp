// SPDX-License-Identifier: Apache-2.0
#include "pgformer/adam.hpp"

#include <cmath>

namespace pgformer {

Adam::Adam(ParameterStore& store, AdamConfig config) : store_(&store), config_(config) {
  for (const auto& e : store.entries()) {
    first_.emplace_back(e.param->value.shape());
    second_.emplace_back(e.param->value.shape());
  }
}

void Adam::step() {
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const auto& entries = store_->entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Parameter& p = *entries[k].param;
    if (!p.trainable) continue;
    Tensor& m = first_[k];
    Tensor& v = second_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p.value[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace pgformer
