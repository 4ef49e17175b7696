// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "pgformer/autodiff.hpp"

namespace pgformer {

using Rng = std::mt19937_64;

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor uniform(Tensor::Shape shape, double bound, Rng& rng);
Tensor normal(Tensor::Shape shape, double stddev, Rng& rng);

/// Fully connected layer: weight [in x out], bias [out].
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParameterStore& store, const std::string& group, std::size_t in, std::size_t out,
                       Rng& rng);
  Var operator()(Tape& tape, const Var& x) const;
  std::size_t in_features() const { return weight->value.rows(); }
  std::size_t out_features() const { return weight->value.cols(); }
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  static LayerNorm create(ParameterStore& store, const std::string& group, std::size_t width);
  Var operator()(Tape& tape, const Var& x) const;
};

}  // namespace pgformer
