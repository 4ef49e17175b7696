// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pgformer/tensor.hpp"

namespace pgformer {

/// A trainable value with its accumulated gradient.
struct Parameter {
  Tensor value;
  Tensor grad;
  bool trainable = true;

  explicit Parameter(Tensor v) : value(std::move(v)), grad(value.shape()) {}
  void zero_grad() noexcept { grad.fill(0.0); }
};

/// Owns parameters under hierarchical names ("encoder.0.xqa.query.weight").
///
/// Parameters live behind stable pointers, so handles held by layers survive
/// moves of the store. The group of a parameter is the name prefix it was
/// registered under and is what gradient reports aggregate over.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    std::string group;
    std::unique_ptr<Parameter> param;
  };

  Parameter& add(const std::string& group, const std::string& leaf, Tensor init);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<std::string> groups() const;
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  std::vector<Entry> entries_;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Tensor::Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode differentiation tape.
///
/// Nodes are appended in evaluation order; backward() walks them in reverse.
/// Gradients of parameter leaves are added into Parameter::grad, so repeated
/// backward calls accumulate until the store is reset.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  /// With gradients off, parameters enter as constants and nothing is recorded
  /// for the backward pass.
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

  Var constant(Tensor value);
  Var parameter(Parameter& p);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  void backward(const Var& loss);

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param != nullptr ? n.param->value : n.value;
  }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  /// Gradient buffer of a node, zero-initialised on first touch.
  Tensor& grad_buffer(std::size_t id);
  bool requires_grad(std::size_t id) const noexcept { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::deque<Node> nodes_;  // stable addresses: value() references outlive later records
  bool record_ = true;
};

// Differentiable operations. All operands must live on the same tape.

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// x [m x n] + row vector b [n] broadcast over rows.
Var add_row(const Var& x, const Var& b);
/// x [m x n] (elementwise) * row vector w [n] broadcast over rows.
Var mul_row(const Var& x, const Var& w);
Var relu(const Var& a);
Var tanh(const Var& a);
Var softmax_rows(const Var& a);
/// Row-wise normalisation with epsilon 1e-5 inside the variance, then gain/bias.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
Var reshape(const Var& a, Tensor::Shape shape);
Var slice_rows(const Var& a, std::size_t begin, std::size_t count);
Var slice_cols(const Var& a, std::size_t begin, std::size_t count);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var repeat_rows(const Var& a, std::size_t times);
/// Elementwise mean of same-shaped operands.
Var elementwise_mean(const std::vector<Var>& parts);
Var sum(const Var& a);
Var mean(const Var& a);
/// Euclidean norm of each row, [m x n] -> [m x 1]; subgradient 0 at the origin.
Var row_norms(const Var& a);
/// For x viewed as blocks of a.rows() rows, returns a * block for every block.
Var block_left_matmul(const Var& a, const Var& x);

/// Linear layer y = x w + b over the trailing dimension.
Var linear(const Var& x, const Var& w, const Var& b);

}  // namespace pgformer
