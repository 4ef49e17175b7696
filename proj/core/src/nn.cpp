// SPDX-License-Identifier: Apache-2.0
#include "pgformer/nn.hpp"

#include <cmath>

namespace pgformer {

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform({fan_in, fan_out}, bound, rng);
}

Tensor uniform(Tensor::Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Tensor normal(Tensor::Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Linear Linear::create(ParameterStore& store, const std::string& group, std::size_t in, std::size_t out,
                      Rng& rng) {
  Linear l;
  l.weight = &store.add(group, "weight", xavier_uniform(in, out, rng));
  l.bias = &store.add(group, "bias", Tensor({out}));
  return l;
}

Var Linear::operator()(Tape& tape, const Var& x) const {
  return linear(x, tape.parameter(*weight), tape.parameter(*bias));
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& group, std::size_t width) {
  LayerNorm n;
  n.gain = &store.add(group, "gain", Tensor({width}, 1.0));
  n.bias = &store.add(group, "bias", Tensor({width}));
  return n;
}

Var LayerNorm::operator()(Tape& tape, const Var& x) const {
  return layer_norm(x, tape.parameter(*gain), tape.parameter(*bias));
}

}  // namespace pgformer
