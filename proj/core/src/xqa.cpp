// SPDX-License-Identifier: Apache-2.0
#include "pgformer/xqa.hpp"

#include <cmath>

#include "pgformer/errors.hpp"

namespace pgformer {

std::string to_string(ProxyMode mode) {
  switch (mode) {
    case ProxyMode::off: return "off";
    case ProxyMode::bilinear: return "bilinear";
    case ProxyMode::gate_multiply: return "gate_mul";
    case ProxyMode::gate_add: return "gate_add";
  }
  return "?";
}

ProxyMode parse_proxy_mode(const std::string& name) {
  if (name == "off" || name == "none") return ProxyMode::off;
  if (name == "bilinear") return ProxyMode::bilinear;
  if (name == "gate_mul" || name == "gate_multiply") return ProxyMode::gate_multiply;
  if (name == "gate_add") return ProxyMode::gate_add;
  throw ConfigError("unknown proxy mode '" + name + "' (expected off, bilinear, gate_mul, gate_add)");
}

XqaParams XqaParams::create(ParameterStore& store, const std::string& group, std::size_t width,
                            std::size_t templates, ProxyMode mode, std::size_t heads, bool separate_queries,
                            Rng& rng) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("XQA heads (" + std::to_string(heads) + ") must divide the model width " + std::to_string(width));
  }
  if (templates == 0) throw ConfigError("template count must be positive");
  XqaParams p;
  // The shared map carries no 1/sqrt(D) factor, so the query projections start
  // with gain D^(-1/4) on each side to keep initial logits near unit scale.
  const double gain = std::pow(static_cast<double>(width), -0.25);
  p.query = Linear::create(store, group + ".query", width, width, rng);
  for (auto& v : p.query.weight->value.values()) v *= gain;
  if (separate_queries) {
    p.follower_query = Linear::create(store, group + ".follower_query", width, width, rng);
    for (auto& v : p.follower_query->weight->value.values()) v *= gain;
  }
  p.template_weights = Linear::create(store, group + ".template_weights", 2 * width, templates, rng);
  p.mode = mode;
  p.heads = heads;
  return p;
}

FutureTemplateParams FutureTemplateParams::create(ParameterStore& store, const std::string& group, std::size_t width,
                                                  Rng& rng) {
  return {Linear::create(store, group + ".query", width, width, rng),
          Linear::create(store, group + ".key", width, width, rng),
          Linear::create(store, group + ".value", width, width, rng)};
}

namespace {

void require_width(const Var& e, const XqaParams& params, const char* what) {
  if (e.value().rank() != 2 || e.cols() != params.width()) {
    throw DimensionError(std::string("XQA ") + what + " stream " + e.value().shape_string() +
                         " does not match model width " + std::to_string(params.width()));
  }
}

Var follower_query(Tape& tape, const Var& e_f, const XqaParams& params) {
  const Linear& fc = params.follower_query ? *params.follower_query : params.query;
  return relu(fc(tape, e_f));
}

// Proxy-aware attention logits for one head.
Var head_logits(const Var& q_l, const Var& q_f, const Var& w_t, const Var& templates, ProxyMode mode,
                std::size_t tiles) {
  switch (mode) {
    case ProxyMode::off: return shared_attention(q_l, q_f);
    case ProxyMode::bilinear: {
      Var g = matmul(w_t, templates);  // [T x d]
      return shared_attention(q_l, q_f, matmul(transpose(g), g));
    }
    case ProxyMode::gate_multiply:
    case ProxyMode::gate_add: {
      Var g = matmul(w_t, templates);
      Var p = matmul_nt(g, g);
      if (tiles > 1) p = concat_cols(std::vector<Var>(tiles, p));
      return gate_variants(shared_attention(q_l, q_f), p, mode);
    }
  }
  throw ConfigError("unhandled proxy mode");
}

Var slice_head(const Var& x, std::size_t head, std::size_t heads) {
  if (heads == 1) return x;
  const std::size_t w = x.cols() / heads;
  return slice_cols(x, head * w, w);
}

// Output of the "leader" side: rows of E_l attend over rows of E_f.
Var attend(const Var& q_l, const Var& q_f, const Var& e_f, const Var& w_t, const Var& templates,
           const XqaParams& params, std::size_t tiles) {
  std::vector<Var> outs;
  for (std::size_t h = 0; h < params.heads; ++h) {
    Var t = params.mode == ProxyMode::off ? Var{} : slice_head(templates, h, params.heads);
    Var a = head_logits(slice_head(q_l, h, params.heads), slice_head(q_f, h, params.heads), w_t, t, params.mode,
                        tiles);
    outs.push_back(matmul(softmax_rows(a), slice_head(e_f, h, params.heads)));
  }
  return outs.size() == 1 ? outs.front() : concat_cols(outs);
}

}  // namespace

std::pair<Var, Var> cross_queries(Tape& tape, const Var& e_l, const Var& e_f, const XqaParams& params) {
  require_width(e_l, params, "leader");
  require_width(e_f, params, "follower");
  return {relu(params.query(tape, e_l)), follower_query(tape, e_f, params)};
}

Var template_weights(Tape& tape, const Var& e_l, const Var& e_f, const XqaParams& params) {
  if (e_l.rows() != e_f.rows()) {
    throw DimensionError("proxy inputs differ in length: " + e_l.value().shape_string() + " vs " +
                         e_f.value().shape_string());
  }
  return params.template_weights(tape, concat_cols({e_l, e_f}));
}

Var build_proxy(Tape& tape, const Var& e_l, const Var& e_f, const Var& templates, const XqaParams& params) {
  Var g = matmul(template_weights(tape, e_l, e_f, params), templates);
  return matmul(transpose(g), g);
}

Var build_temporal_proxy(Tape& tape, const Var& e_l, const Var& e_f, const Var& templates, const XqaParams& params) {
  Var g = matmul(template_weights(tape, e_l, e_f, params), templates);
  return matmul_nt(g, g);
}

Var shared_attention(const Var& q_l, const Var& q_f, const std::optional<Var>& proxy) {
  if (q_l.cols() != q_f.cols()) {
    throw DimensionError("query widths differ: " + q_l.value().shape_string() + " vs " + q_f.value().shape_string());
  }
  if (!proxy) return matmul_nt(q_l, q_f);
  return matmul_nt(matmul(q_l, *proxy), q_f);
}

Var gate_variants(const Var& attention, const Var& temporal_proxy, ProxyMode mode) {
  switch (mode) {
    case ProxyMode::gate_multiply: return hadamard(attention, temporal_proxy);
    case ProxyMode::gate_add: return add(attention, temporal_proxy);
    default: throw ConfigError("gate_variants called with non-gate proxy mode " + to_string(mode));
  }
}

std::pair<Var, Var> xqa_forward(Tape& tape, const Var& e_l, const Var& e_f, const Var& templates,
                                const XqaParams& params) {
  if (e_l.shape() != e_f.shape()) {
    throw DimensionError("XQA streams differ: " + e_l.value().shape_string() + " vs " + e_f.value().shape_string());
  }
  auto [q_l, q_f] = cross_queries(tape, e_l, e_f, params);
  Var w_t = params.mode == ProxyMode::off ? Var{} : template_weights(tape, e_l, e_f, params);
  std::vector<Var> out_l, out_f;
  for (std::size_t h = 0; h < params.heads; ++h) {
    Var a = head_logits(slice_head(q_l, h, params.heads), slice_head(q_f, h, params.heads), w_t,
                        params.mode == ProxyMode::off ? Var{} : slice_head(templates, h, params.heads), params.mode, 1);
    out_l.push_back(matmul(softmax_rows(a), slice_head(e_f, h, params.heads)));
    out_f.push_back(matmul(softmax_rows(transpose(a)), slice_head(e_l, h, params.heads)));
  }
  if (params.heads == 1) return {out_l.front(), out_f.front()};
  return {concat_cols(out_l), concat_cols(out_f)};
}

Var future_templates(Tape& tape, const Var& t_en, const Var& t_q, const FutureTemplateParams& params) {
  if (t_en.shape() != t_q.shape()) {
    throw DimensionError("template shapes differ: " + t_en.value().shape_string() + " vs " + t_q.value().shape_string());
  }
  Var q = params.query(tape, t_q);
  Var k = params.key(tape, t_en);
  Var v = params.value(tape, t_en);
  const double s = 1.0 / std::sqrt(static_cast<double>(t_en.cols()));
  return matmul(softmax_rows(scale(matmul_nt(q, k), s)), v);
}

std::vector<Var> xqa_multi(Tape& tape, const std::vector<Var>& streams, const Var& templates,
                           const XqaParams& params) {
  if (streams.size() < 2) throw ConfigError("xqa_multi needs at least two persons");
  for (const auto& s : streams) {
    require_width(s, params, "person");
    if (s.shape() != streams.front().shape()) throw DimensionError("xqa_multi streams must share one shape");
  }
  std::vector<Var> outputs;
  for (std::size_t l = 0; l < streams.size(); ++l) {
    std::vector<Var> others;
    for (std::size_t o = 0; o < streams.size(); ++o)
      if (o != l) others.push_back(streams[o]);
    Var e_f = others.size() == 1 ? others.front() : concat_rows(others);
    Var q_l = relu(params.query(tape, streams[l]));
    Var q_f = follower_query(tape, e_f, params);
    Var w_t;
    if (params.mode != ProxyMode::off) {
      Var partner = others.size() == 1 ? others.front() : elementwise_mean(others);
      w_t = template_weights(tape, streams[l], partner, params);
    }
    outputs.push_back(attend(q_l, q_f, e_f, w_t, templates, params, others.size()));
  }
  return outputs;
}

}  // namespace pgformer
