// SPDX-License-Identifier: Apache-2.0
#include "pgformer/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "pgformer/errors.hpp"

namespace pgformer {

// ---------------------------------------------------------------- store

Parameter& ParameterStore::add(const std::string& group, const std::string& leaf, Tensor init) {
  std::string name = group.empty() ? leaf : group + "." + leaf;
  if (contains(name)) throw ConfigError("duplicate parameter name " + name);
  entries_.push_back({name, group, std::make_unique<Parameter>(std::move(init))});
  return *entries_.back().param;
}

Parameter& ParameterStore::get(const std::string& name) {
  for (auto& e : entries_)
    if (e.name == name) return *e.param;
  throw ConfigError("unknown parameter " + name);
}

const Parameter& ParameterStore::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return *e.param;
  throw ConfigError("unknown parameter " + name);
}

bool ParameterStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

std::vector<std::string> ParameterStore::groups() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.param->value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.param->zero_grad();
}

// ---------------------------------------------------------------- tape

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, {}, false});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{{}, {}, &p, {}, record_ && p.trainable});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const auto& v : inputs) {
    if (v.tape() != this) throw ContractError("operands recorded on different tapes");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, nullptr, needs ? std::move(fn) : BackwardFn{}, needs});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool needs = false;
  for (const auto& v : inputs) {
    if (v.tape() != this) throw ContractError("operands recorded on different tapes");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, nullptr, needs ? std::move(fn) : BackwardFn{}, needs});
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(value(id).shape());
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (value(loss.id()).size() != 1) {
    throw ContractError("backward requires a scalar loss, got " + value(loss.id()).shape_string());
  }
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

// ---------------------------------------------------------------- helpers

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ContractError("operation on an empty Var");
  return *a.tape();
}

void add_to(Tensor& dst, const Tensor& src) {
  double* d = dst.raw();
  const double* s = src.raw();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
}

void require_matrix(const Var& a, const char* op) {
  if (a.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + a.value().shape_string());
  }
}

}  // namespace

// ---------------------------------------------------------------- ops

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: cannot multiply " + av.shape_string() + " by " + bv.shape_string());
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor c({m, n});
  kernels::gemm_acc(av.raw(), bv.raw(), c.raw(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(c), {a, b}, [ia, ib, m, k, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) kernels::gemm_nt_acc(g.raw(), tp.value(ib).raw(), tp.grad_buffer(ia).raw(), m, n, k);
    if (tp.requires_grad(ib)) kernels::gemm_tn_acc(tp.value(ia).raw(), g.raw(), tp.grad_buffer(ib).raw(), k, m, n);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw DimensionError("matmul_nt: cannot multiply " + av.shape_string() + " by transpose of " +
                         bv.shape_string());
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor c({m, n});
  kernels::gemm_nt_acc(av.raw(), bv.raw(), c.raw(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(c), {a, b}, [ia, ib, m, k, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    // dA = G B, dB = G^T A
    if (tp.requires_grad(ia)) kernels::gemm_acc(g.raw(), tp.value(ib).raw(), tp.grad_buffer(ia).raw(), m, n, k);
    if (tp.requires_grad(ib)) kernels::gemm_tn_acc(g.raw(), tp.value(ia).raw(), tp.grad_buffer(ib).raw(), n, m, k);
  });
}

Var transpose(const Var& a) {
  Tape& t = tape_of(a);
  require_matrix(a, "transpose");
  const std::size_t ia = a.id();
  return t.record(transpose(a.value()), {a}, [ia](Tape& tp, std::size_t self) {
    add_to(tp.grad_buffer(ia), transpose(tp.grad(self)));
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  require_same_shape(a, b, "add");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(a.value() + b.value(), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    if (tp.requires_grad(ia)) add_to(tp.grad_buffer(ia), tp.grad(self));
    if (tp.requires_grad(ib)) add_to(tp.grad_buffer(ib), tp.grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  require_same_shape(a, b, "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(a.value() - b.value(), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    if (tp.requires_grad(ia)) add_to(tp.grad_buffer(ia), tp.grad(self));
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad_buffer(ib);
      const Tensor& g = tp.grad(self);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var hadamard(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  require_same_shape(a, b, "hadamard");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) {
      Tensor& ga = tp.grad_buffer(ia);
      const Tensor& bv = tp.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad_buffer(ib);
      const Tensor& av = tp.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.record(s * a.value(), {a}, [ia, s](Tape& tp, std::size_t self) {
    Tensor& ga = tp.grad_buffer(ia);
    const Tensor& g = tp.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var add_row(const Var& x, const Var& b) {
  Tape& t = tape_of(x);
  const std::size_t n = x.cols();
  if (b.value().size() != n) {
    throw DimensionError("add_row: bias " + b.value().shape_string() + " does not match " +
                         x.value().shape_string());
  }
  Tensor out = x.value();
  const std::size_t m = out.rows();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += b.value()[c];
  const std::size_t ix = x.id(), ib = b.id();
  return t.record(std::move(out), {x, b}, [ix, ib, m, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ix)) add_to(tp.grad_buffer(ix), g);
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad_buffer(ib);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
    }
  });
}

Var mul_row(const Var& x, const Var& w) {
  Tape& t = tape_of(x);
  const std::size_t n = x.cols();
  if (w.value().size() != n) {
    throw DimensionError("mul_row: weights " + w.value().shape_string() + " do not match " +
                         x.value().shape_string());
  }
  Tensor out = x.value();
  const std::size_t m = out.rows();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] *= w.value()[c];
  const std::size_t ix = x.id(), iw = w.id();
  return t.record(std::move(out), {x, w}, [ix, iw, m, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ix)) {
      Tensor& gx = tp.grad_buffer(ix);
      const Tensor& wv = tp.value(iw);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += g[r * n + c] * wv[c];
    }
    if (tp.requires_grad(iw)) {
      Tensor& gw = tp.grad_buffer(iw);
      const Tensor& xv = tp.value(ix);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gw[c] += g[r * n + c] * xv[r * n + c];
    }
  });
}

Var relu(const Var& a) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& x = tp.value(ia);
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var tanh(const Var& a) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (auto& v : out.values()) v = std::tanh(v);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var softmax_rows(const Var& a) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  const std::size_t m = out.rows(), n = out.cols();
  for (std::size_t r = 0; r < m; ++r) {
    double* row = out.raw() + r * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      row[c] = std::exp(row[c] - mx);
      s += row[c];
    }
    for (std::size_t c = 0; c < n; ++c) row[c] /= s;
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia, m, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t o = r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += g[o + c] * y[o + c];
      for (std::size_t c = 0; c < n; ++c) ga[o + c] += y[o + c] * (g[o + c] - dot);
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  Tape& t = tape_of(x);
  const std::size_t n = x.cols();
  if (n < 2) throw DimensionError("layer_norm needs at least 2 features, got " + x.value().shape_string());
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("layer_norm: affine parameters do not match " + x.value().shape_string());
  }
  const std::size_t m = x.rows();
  Tensor normed(x.shape());
  std::vector<double> inv_std(m);
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = xv.raw() + r * n;
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += row[c];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (row[c] - mu) * inv_std[r];
      normed[r * n + c] = h;
      out[r * n + c] = h * gain.value()[c] + bias.value()[c];
    }
  }
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return t.record(std::move(out), {x, gain, bias},
                  [ix, ig, ib, m, n, normed = std::move(normed), inv_std = std::move(inv_std)](Tape& tp,
                                                                                               std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& gv = tp.value(ig);
                    if (tp.requires_grad(ig)) {
                      Tensor& gg = tp.grad_buffer(ig);
                      for (std::size_t r = 0; r < m; ++r)
                        for (std::size_t c = 0; c < n; ++c) gg[c] += g[r * n + c] * normed[r * n + c];
                    }
                    if (tp.requires_grad(ib)) {
                      Tensor& gb = tp.grad_buffer(ib);
                      for (std::size_t r = 0; r < m; ++r)
                        for (std::size_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
                    }
                    if (tp.requires_grad(ix)) {
                      Tensor& gx = tp.grad_buffer(ix);
                      const double inv_n = 1.0 / static_cast<double>(n);
                      for (std::size_t r = 0; r < m; ++r) {
                        const std::size_t o = r * n;
                        double mean_d = 0.0, mean_dh = 0.0;
                        for (std::size_t c = 0; c < n; ++c) {
                          const double d = g[o + c] * gv[c];
                          mean_d += d;
                          mean_dh += d * normed[o + c];
                        }
                        mean_d *= inv_n;
                        mean_dh *= inv_n;
                        for (std::size_t c = 0; c < n; ++c) {
                          const double d = g[o + c] * gv[c];
                          gx[o + c] += inv_std[r] * (d - mean_d - normed[o + c] * mean_dh);
                        }
                      }
                    }
                  });
}

Var reshape(const Var& a, Tensor::Shape shape) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.record(a.value().reshaped(std::move(shape)), {a}, [ia](Tape& tp, std::size_t self) {
    Tensor& ga = tp.grad_buffer(ia);
    const Tensor& g = tp.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  require_matrix(a, "slice_rows");
  const std::size_t n = a.cols();
  if (count == 0 || begin + count > a.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + a.value().shape_string());
  }
  Tensor out({count, n});
  std::copy_n(a.value().raw() + begin * n, count * n, out.raw());
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia, begin, count, n](Tape& tp, std::size_t self) {
    Tensor& ga = tp.grad_buffer(ia);
    const Tensor& g = tp.grad(self);
    for (std::size_t i = 0; i < count * n; ++i) ga[begin * n + i] += g[i];
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  require_matrix(a, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (count == 0 || begin + count > n) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + a.value().shape_string());
  }
  Tensor out({m, count});
  for (std::size_t r = 0; r < m; ++r) std::copy_n(a.value().raw() + r * n + begin, count, out.raw() + r * count);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia, begin, count, m, n](Tape& tp, std::size_t self) {
    Tensor& ga = tp.grad_buffer(ia);
    const Tensor& g = tp.grad(self);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < count; ++c) ga[r * n + begin + c] += g[r * count + c];
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  Tape& t = tape_of(parts.front());
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_rows");
    if (p.cols() != n) throw DimensionError("concat_rows: column mismatch " + p.value().shape_string());
    m += p.rows();
  }
  Tensor out({m, n});
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().raw(), p.value().size(), out.raw() + off);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.value().size();
  }
  return t.record(std::move(out), parts, [ids, offsets](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Tensor& gp = tp.grad_buffer(ids[k]);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  Tape& t = tape_of(parts.front());
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.rows() != m) throw DimensionError("concat_cols: row mismatch " + p.value().shape_string());
    n += p.cols();
  }
  Tensor out({m, n});
  std::vector<std::size_t> ids, offsets, widths;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < m; ++r) std::copy_n(p.value().raw() + r * w, w, out.raw() + r * n + off);
    ids.push_back(p.id());
    offsets.push_back(off);
    widths.push_back(w);
    off += w;
  }
  return t.record(std::move(out), parts, [ids, offsets, widths, m, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Tensor& gp = tp.grad_buffer(ids[k]);
      const std::size_t w = widths[k];
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < w; ++c) gp[r * w + c] += g[r * n + offsets[k] + c];
    }
  });
}

Var repeat_rows(const Var& a, std::size_t times) {
  Tape& t = tape_of(a);
  if (times == 0) throw DimensionError("repeat_rows: times must be positive");
  const std::size_t sz = a.value().size();
  const std::size_t n = a.cols();
  Tensor out({a.rows() * times, n});
  for (std::size_t k = 0; k < times; ++k) std::copy_n(a.value().raw(), sz, out.raw() + k * sz);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia, times, sz](Tape& tp, std::size_t self) {
    Tensor& ga = tp.grad_buffer(ia);
    const Tensor& g = tp.grad(self);
    for (std::size_t k = 0; k < times; ++k)
      for (std::size_t i = 0; i < sz; ++i) ga[i] += g[k * sz + i];
  });
}

Var elementwise_mean(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("elementwise_mean: no operands");
  Tape& t = tape_of(parts.front());
  Tensor out(parts.front().shape());
  for (const auto& p : parts) {
    require_same_shape(parts.front(), p, "elementwise_mean");
    out += p.value();
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (auto& v : out.values()) v *= inv;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return t.record(std::move(out), parts, [ids, inv](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    for (auto id : ids) {
      if (!tp.requires_grad(id)) continue;
      Tensor& gp = tp.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) gp[i] += inv * g[i];
    }
  });
}

Var sum(const Var& a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return t.record(Tensor::scalar(s), {a}, [ia](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    for (auto& v : tp.grad_buffer(ia).values()) v += g;
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var row_norms(const Var& a) {
  Tape& t = tape_of(a);
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out({m, 1});
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += a.value()[r * n + c] * a.value()[r * n + c];
    out[r] = std::sqrt(s);
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia, m, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    const Tensor& x = tp.value(ia);
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < m; ++r) {
      if (y[r] == 0.0) continue;
      const double f = g[r] / y[r];
      for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += f * x[r * n + c];
    }
  });
}

Var block_left_matmul(const Var& a, const Var& x) {
  Tape& t = tape_of(a);
  require_matrix(a, "block_left_matmul");
  const std::size_t j = a.rows();
  if (a.cols() != j || x.rows() % j != 0) {
    throw DimensionError("block_left_matmul: " + a.value().shape_string() + " cannot act on blocks of " +
                         x.value().shape_string());
  }
  const std::size_t blocks = x.rows() / j, f = x.cols();
  Tensor out(x.shape());
  for (std::size_t b = 0; b < blocks; ++b)
    kernels::gemm_acc(a.value().raw(), x.value().raw() + b * j * f, out.raw() + b * j * f, j, j, f);
  const std::size_t ia = a.id(), ix = x.id();
  return t.record(std::move(out), {a, x}, [ia, ix, j, f, blocks](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ix)) {
      Tensor& gx = tp.grad_buffer(ix);
      for (std::size_t b = 0; b < blocks; ++b)
        kernels::gemm_tn_acc(tp.value(ia).raw(), g.raw() + b * j * f, gx.raw() + b * j * f, j, j, f);
    }
    if (tp.requires_grad(ia)) {
      Tensor& gaa = tp.grad_buffer(ia);
      for (std::size_t b = 0; b < blocks; ++b)
        kernels::gemm_nt_acc(g.raw() + b * j * f, tp.value(ix).raw() + b * j * f, gaa.raw(), j, f, j);
    }
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const Tensor::Shape x_shape = x.shape();
  const Tensor& wv = w.value();
  if (wv.rank() != 2 || x_shape.back() != wv.rows()) {
    throw DimensionError("linear: input " + shape_string(x_shape) + " does not match weight " + wv.shape_string());
  }
  const std::size_t out_features = wv.cols();
  if (x_shape.size() == 2) return add_row(matmul(x, w), b);
  Var y = add_row(matmul(reshape(x, {x.rows(), x.cols()}), w), b);
  Tensor::Shape out_shape = x_shape;
  out_shape.back() = out_features;
  return reshape(y, std::move(out_shape));
}

}  // namespace pgformer
