// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pgformer/autodiff.hpp"
#include "pgformer/nn.hpp"

namespace pgformer::test {

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Relative error ||a - n|| / max(||a||, ||n||) between reverse-mode gradients and
/// central differences of `fn` at `inputs`, over all inputs jointly.
inline double fd_relative_error(const ScalarFn& fn, std::vector<Tensor> inputs, double h = 1e-6) {
  std::vector<Parameter> params;
  params.reserve(inputs.size());
  for (auto& t : inputs) params.emplace_back(t);
  {
    Tape tape;
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(tape.parameter(p));
    tape.backward(fn(tape, vars));
  }
  auto eval = [&] {
    Tape tape(false);
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(tape.parameter(p));
    return fn(tape, vars).value().item();
  };
  double diff2 = 0, a2 = 0, n2 = 0;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double up = eval();
      p.value[i] = orig - h;
      const double down = eval();
      p.value[i] = orig;
      const double numeric = (up - down) / (2 * h);
      diff2 += (numeric - p.grad[i]) * (numeric - p.grad[i]);
      a2 += p.grad[i] * p.grad[i];
      n2 += numeric * numeric;
    }
  }
  const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
  return denom > 0 ? std::sqrt(diff2) / denom : 0.0;
}

/// Contracts a tensor-valued op with a fixed random weighting so it can be checked as a scalar.
inline ScalarFn contracted(std::function<Var(Tape&, const std::vector<Var>&)> op, Tensor weights) {
  return [op = std::move(op), w = std::move(weights)](Tape& tape, const std::vector<Var>& v) {
    Var y = op(tape, v);
    return sum(hadamard(y, tape.constant(w.reshaped(y.shape()))));
  };
}

inline Tensor random_tensor(Tensor::Shape shape, Rng& rng, double stddev = 1.0) {
  return normal(std::move(shape), stddev, rng);
}

}  // namespace pgformer::test
