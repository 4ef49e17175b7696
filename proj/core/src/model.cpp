// SPDX-License-Identifier: Apache-2.0
#include "pgformer/model.hpp"

#include <cmath>

#include "pgformer/errors.hpp"

namespace pgformer {

namespace {

void require_positive(std::size_t v, const char* name) {
  if (v == 0) throw ConfigError(std::string("config: ") + name + " must be positive");
}

Tensor to_network(const Tensor& frames, double scale) {
  // [T x J x 3] -> [T x 3J]
  Tensor flat = frames.reshaped({frames.dim(0), frames.dim(1) * 3});
  for (auto& v : flat.values()) v *= scale;
  return flat;
}

}  // namespace

void PGformerConfig::validate() const {
  require_positive(width, "width");
  require_positive(heads, "heads");
  require_positive(head_width, "head_width");
  require_positive(ffn_width, "ffn_width");
  require_positive(templates, "templates");
  require_positive(query_window, "query_window");
  require_positive(input_frames, "input_frames");
  require_positive(output_frames, "output_frames");
  require_positive(joints, "joints");
  require_positive(xqa_heads, "xqa_heads");
  require_positive(gcn_hidden, "gcn_hidden");
  if (query_window > input_frames) {
    throw ConfigError("config: query_window (" + std::to_string(query_window) + ") exceeds input_frames (" +
                      std::to_string(input_frames) + ")");
  }
  if (width % xqa_heads != 0) throw ConfigError("config: xqa_heads must divide width");
  if (gcn_layers < 1) throw ConfigError("config: gcn_layers must be at least 1");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw ConfigError("config: fps must be positive");
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw ConfigError("config: input_scale must be positive");
}

std::string PGformerConfig::to_text() const {
  ConfigWriter w;
  w.write("layers", layers);
  w.write("width", width);
  w.write("heads", heads);
  w.write("head_width", head_width);
  w.write("ffn_width", ffn_width);
  w.write("templates", templates);
  w.write("query_window", query_window);
  w.write("input_frames", input_frames);
  w.write("output_frames", output_frames);
  w.write("joints", joints);
  w.write("fps", fps);
  w.write("use_dct", use_dct);
  w.write("use_xqa", use_xqa);
  w.write("use_proxy", use_proxy);
  w.write("proxy_mode", to_string(proxy_mode));
  w.write("use_gravity_loss", use_gravity_loss);
  w.write("separate_queries", separate_queries);
  w.write("xqa_heads", xqa_heads);
  w.write("xqa_residual", xqa_residual);
  w.write("gcn_layers", gcn_layers);
  w.write("gcn_hidden", gcn_hidden);
  w.write("input_scale", input_scale);
  w.write("canonicalize", canonicalize);
  return w.text();
}

void PGformerConfig::read(ConfigReader& r) {
  r.read("layers", layers);
  r.read("width", width);
  r.read("heads", heads);
  r.read("head_width", head_width);
  r.read("ffn_width", ffn_width);
  r.read("templates", templates);
  r.read("query_window", query_window);
  r.read("input_frames", input_frames);
  r.read("output_frames", output_frames);
  r.read("joints", joints);
  r.read("fps", fps);
  r.read("use_dct", use_dct);
  r.read("use_xqa", use_xqa);
  r.read("use_proxy", use_proxy);
  std::string mode = to_string(proxy_mode);
  r.read("proxy_mode", mode);
  proxy_mode = parse_proxy_mode(mode);
  r.read("use_gravity_loss", use_gravity_loss);
  r.read("separate_queries", separate_queries);
  r.read("xqa_heads", xqa_heads);
  r.read("xqa_residual", xqa_residual);
  r.read("gcn_layers", gcn_layers);
  r.read("gcn_hidden", gcn_hidden);
  r.read("input_scale", input_scale);
  r.read("canonicalize", canonicalize);
}

MultiHeadAttention MultiHeadAttention::create(ParameterStore& store, const std::string& group, std::size_t width,
                                              std::size_t heads, std::size_t head_width, Rng& rng) {
  const std::size_t inner = heads * head_width;
  MultiHeadAttention m;
  m.query = Linear::create(store, group + ".query", width, inner, rng);
  m.key = Linear::create(store, group + ".key", width, inner, rng);
  m.value = Linear::create(store, group + ".value", width, inner, rng);
  m.output = Linear::create(store, group + ".output", inner, width, rng);
  m.heads = heads;
  m.head_width = head_width;
  return m;
}

Var MultiHeadAttention::operator()(Tape& tape, const Var& queries, const Var& keys_values) const {
  Var q = query(tape, queries);
  Var k = key(tape, keys_values);
  Var v = value(tape, keys_values);
  const double s = 1.0 / std::sqrt(static_cast<double>(head_width));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : slice_cols(q, h * head_width, head_width);
    Var kh = heads == 1 ? k : slice_cols(k, h * head_width, head_width);
    Var vh = heads == 1 ? v : slice_cols(v, h * head_width, head_width);
    outs.push_back(matmul(softmax_rows(scale(matmul_nt(qh, kh), s)), vh));
  }
  return output(tape, heads == 1 ? outs.front() : concat_cols(outs));
}

FeedForward FeedForward::create(ParameterStore& store, const std::string& group, std::size_t width,
                                std::size_t hidden, Rng& rng) {
  return {Linear::create(store, group + ".expand", width, hidden, rng),
          Linear::create(store, group + ".contract", hidden, width, rng)};
}

Var FeedForward::operator()(Tape& tape, const Var& x) const { return contract(tape, relu(expand(tape, x))); }

Tensor positional_encoding(std::size_t first_position, std::size_t count, std::size_t width) {
  Tensor pe({count, width});
  for (std::size_t p = 0; p < count; ++p) {
    const double pos = static_cast<double>(first_position + p);
    for (std::size_t i = 0; i < width; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
      pe(p, i) = std::sin(pos * freq);
      if (i + 1 < width) pe(p, i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

PGformer::PGformer(PGformerConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const std::size_t d = config_.width, pose = 3 * config_.joints;
  pose_embedding_ = Linear::create(store_, "pose_encoding", pose, d, rng);
  query_embedding_ = Linear::create(store_, "query.embedding", pose, d, rng);
  query_squeeze_ = Linear::create(store_, "query.squeeze", config_.query_window * d, d, rng);

  const ProxyMode mode = config_.effective_proxy();
  if (config_.use_xqa) {
    encoder_templates_ = &store_.add("templates", "encoder", normal({config_.templates, d}, 1.0, rng));
    future_queries_ = &store_.add("templates", "future_query", normal({config_.templates, d}, 1.0, rng));
    future_attention_ = FutureTemplateParams::create(store_, "templates.future_attention", d, rng);
  }

  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string g = "encoder." + std::to_string(l);
    EncoderLayer layer;
    layer.attn_norm = LayerNorm::create(store_, g + ".attn_norm", d);
    layer.self_attention = MultiHeadAttention::create(store_, g + ".self_attention", d, config_.heads,
                                                      config_.head_width, rng);
    layer.ffn_norm = LayerNorm::create(store_, g + ".ffn_norm", d);
    layer.ffn = FeedForward::create(store_, g + ".ffn", d, config_.ffn_width, rng);
    if (config_.use_xqa) {
      layer.xqa_norm = LayerNorm::create(store_, g + ".xqa_norm", d);
      layer.xqa = XqaParams::create(store_, g + ".xqa", d, config_.templates, mode, config_.xqa_heads,
                                    config_.separate_queries, rng);
    }
    encoder_.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string g = "decoder." + std::to_string(l);
    DecoderLayer layer;
    layer.self_norm = LayerNorm::create(store_, g + ".self_norm", d);
    layer.self_attention = MultiHeadAttention::create(store_, g + ".self_attention", d, config_.heads,
                                                      config_.head_width, rng);
    layer.cross_norm = LayerNorm::create(store_, g + ".cross_norm", d);
    layer.cross_attention = MultiHeadAttention::create(store_, g + ".cross_attention", d, config_.heads,
                                                       config_.head_width, rng);
    layer.ffn_norm = LayerNorm::create(store_, g + ".ffn_norm", d);
    layer.ffn = FeedForward::create(store_, g + ".ffn", d, config_.ffn_width, rng);
    if (config_.use_xqa) {
      layer.xqa_norm = LayerNorm::create(store_, g + ".xqa_norm", d);
      layer.xqa = XqaParams::create(store_, g + ".xqa", d, config_.templates, mode, config_.xqa_heads,
                                    config_.separate_queries, rng);
    }
    decoder_.push_back(std::move(layer));
  }

  gcn_.projection = Linear::create(store_, "pose_decoding.projection", d, pose, rng);
  const std::size_t j = config_.joints;
  gcn_.adjacency = &store_.add("pose_decoding.gcn", "adjacency",
                               uniform({j, j}, 1.0 / std::sqrt(static_cast<double>(j)), rng));
  for (std::size_t l = 0; l < config_.gcn_layers; ++l) {
    const std::size_t in = l == 0 ? 3 : config_.gcn_hidden;
    const std::size_t out = l + 1 == config_.gcn_layers ? 3 : config_.gcn_hidden;
    gcn_.weights.push_back(&store_.add("pose_decoding.gcn", "weight" + std::to_string(l), xavier_uniform(in, out, rng)));
  }

  gravity_[0] = &store_.add("gravity", "leader", Tensor({j, 3}));
  gravity_[1] = &store_.add("gravity", "follower", Tensor({j, 3}));
  if (!config_.use_gravity_loss) gravity_[0]->trainable = gravity_[1]->trainable = false;

  encoder_positions_ = positional_encoding(0, config_.input_frames, d);
  decoder_positions_ = positional_encoding(config_.input_frames, config_.output_frames, d);
}

Var PGformer::pose_encode(Tape& tape, const Tensor& history_tokens) const {
  if (history_tokens.rank() != 2 || history_tokens.cols() != 3 * config_.joints) {
    throw DimensionError("pose_encode expects [T x " + std::to_string(3 * config_.joints) + "], got " +
                         history_tokens.shape_string());
  }
  Var e = pose_embedding_(tape, tape.constant(history_tokens));
  const std::size_t t = history_tokens.rows();
  const Tensor pe = t == config_.input_frames ? encoder_positions_ : positional_encoding(0, t, config_.width);
  return add(e, tape.constant(pe));
}

std::vector<Var> PGformer::cross_person(Tape& tape, const std::vector<Var>& streams, const Var& templates,
                                        const XqaParams& xqa) const {
  if (streams.size() == 2) {
    auto [o_l, o_f] = xqa_forward(tape, streams[0], streams[1], templates, xqa);
    return {o_l, o_f};
  }
  return xqa_multi(tape, streams, templates, xqa);
}

PGformer::EncoderOutput PGformer::encoder_forward(Tape& tape, std::vector<Var> h) const {
  if (h.empty()) throw ConfigError("encoder_forward needs at least one person");
  EncoderOutput out;
  if (encoder_templates_ != nullptr) out.templates = tape.parameter(*encoder_templates_);
  for (const EncoderLayer& layer : encoder_) {
    for (Var& x : h) {
      Var n = layer.attn_norm(tape, x);
      x = add(x, layer.self_attention(tape, n, n));
      x = add(x, layer.ffn(tape, layer.ffn_norm(tape, x)));
    }
    if (layer.xqa && h.size() >= 2) {
      std::vector<Var> normed;
      for (const Var& x : h) normed.push_back(layer.xqa_norm(tape, x));
      auto mixed = cross_person(tape, normed, out.templates, *layer.xqa);
      for (std::size_t p = 0; p < h.size(); ++p) h[p] = config_.xqa_residual ? add(h[p], mixed[p]) : mixed[p];
    }
  }
  out.states = std::move(h);
  return out;
}

Var PGformer::build_queries(Tape& tape, const Tensor& history, bool last_frame_only) const {
  const std::size_t t = history.rows(), mq = config_.query_window, k = config_.output_frames;
  if (history.rank() != 2 || history.cols() != 3 * config_.joints) {
    throw DimensionError("build_queries expects [T x " + std::to_string(3 * config_.joints) + "], got " +
                         history.shape_string());
  }
  Var q;
  if (last_frame_only) {
    Tensor last({1, history.cols()});
    for (std::size_t c = 0; c < history.cols(); ++c) last(0, c) = history(t - 1, c);
    q = query_embedding_(tape, tape.constant(std::move(last)));
  } else {
    if (mq > t) {
      throw ConfigError("query_window (" + std::to_string(mq) + ") exceeds history length " + std::to_string(t));
    }
    Tensor window({mq, history.cols()});
    for (std::size_t r = 0; r < mq; ++r)
      for (std::size_t c = 0; c < history.cols(); ++c) window(r, c) = history(t - mq + r, c);
    Var per_frame = query_embedding_(tape, tape.constant(std::move(window)));  // [M_q x D]
    q = query_squeeze_(tape, reshape(per_frame, {1, mq * config_.width}));
  }
  return add(repeat_rows(q, k), tape.constant(decoder_positions_));
}

std::vector<Var> PGformer::decoder_forward(Tape& tape, std::vector<Var> h, const std::vector<Var>& memory,
                                           const Var& encoder_templates) const {
  if (h.size() != memory.size()) throw DimensionError("decoder queries and memories differ in person count");
  Var future;
  if (config_.use_xqa && h.size() >= 2) {
    future = future_templates(tape, encoder_templates, tape.parameter(*future_queries_), future_attention_);
  }
  for (const DecoderLayer& layer : decoder_) {
    for (std::size_t p = 0; p < h.size(); ++p) {
      Var n = layer.self_norm(tape, h[p]);
      h[p] = add(h[p], layer.self_attention(tape, n, n));
      h[p] = add(h[p], layer.cross_attention(tape, layer.cross_norm(tape, h[p]), memory[p]));
      h[p] = add(h[p], layer.ffn(tape, layer.ffn_norm(tape, h[p])));
    }
    if (layer.xqa && h.size() >= 2) {
      std::vector<Var> normed;
      for (const Var& x : h) normed.push_back(layer.xqa_norm(tape, x));
      auto mixed = cross_person(tape, normed, future, *layer.xqa);
      for (std::size_t p = 0; p < h.size(); ++p) h[p] = config_.xqa_residual ? add(h[p], mixed[p]) : mixed[p];
    }
  }
  return h;
}

Var PGformer::symmetric_adjacency(Tape& tape) const {
  Var a = tape.parameter(*gcn_.adjacency);
  return scale(add(a, transpose(a)), 0.5);
}

Var PGformer::pose_decode(Tape& tape, const Var& decoded, const Tensor& last_frame) const {
  const std::size_t k = config_.output_frames, j = config_.joints;
  if (decoded.value().rank() != 2 || decoded.rows() != k || decoded.cols() != config_.width) {
    throw DimensionError("pose_decode expects [" + std::to_string(k) + " x " + std::to_string(config_.width) +
                         "], got " + decoded.value().shape_string());
  }
  if (last_frame.size() != 3 * j) throw DimensionError("pose_decode: last frame must hold 3J values");
  Var tokens = gcn_.projection(tape, decoded);  // [K x 3J]

  // Token 0 is the last observation; in the DCT domain it becomes the DC
  // coefficient of a sequence that holds x_T for all K+1 frames.
  Tensor first({1, 3 * j});
  const double dc = config_.use_dct ? std::sqrt(static_cast<double>(k + 1)) : 1.0;
  for (std::size_t c = 0; c < 3 * j; ++c) first(0, c) = dc * last_frame[c];
  Var seq = concat_rows({tape.constant(std::move(first)), tokens});  // [(K+1) x 3J]

  Var nodes = reshape(seq, {(k + 1) * j, 3});
  Var adj = symmetric_adjacency(tape);
  Var g = nodes;
  for (std::size_t l = 0; l < gcn_.weights.size(); ++l) {
    g = matmul(block_left_matmul(adj, g), tape.parameter(*gcn_.weights[l]));
    if (l + 1 < gcn_.weights.size()) g = tanh(g);
  }
  Var out = reshape(add(nodes, g), {k + 1, 3 * j});

  if (config_.use_dct) {
    const Tensor basis = dct_matrix(k + 1);  // rows are basis vectors: x = C^T c
    out = matmul(tape.constant(transpose(basis)), out);
  }
  return slice_rows(out, 1, k);
}

std::vector<Var> PGformer::forward(Tape& tape, const std::vector<Tensor>& histories) const {
  const std::size_t n = histories.size(), t = config_.input_frames, j = config_.joints;
  if (n == 0) throw ConfigError("forward needs at least one person");
  std::vector<Tensor> frames;
  std::vector<Var> embeddings;
  for (const Tensor& hist : histories) {
    if (hist.rank() != 3 || hist.dim(0) != t || hist.dim(1) != j || hist.dim(2) != 3) {
      throw DimensionError("forward expects histories of shape [" + std::to_string(t) + " x " + std::to_string(j) +
                           " x 3], got " + hist.shape_string());
    }
    frames.push_back(to_network(hist, config_.input_scale));
    embeddings.push_back(pose_encode(tape, config_.use_dct ? dct_time(frames.back()) : frames.back()));
  }
  EncoderOutput enc = encoder_forward(tape, std::move(embeddings));

  std::vector<Var> queries;
  for (const Tensor& f : frames) queries.push_back(build_queries(tape, f, n > 2));
  std::vector<Var> decoded = decoder_forward(tape, std::move(queries), enc.states, enc.templates);

  std::vector<Var> out;
  for (std::size_t p = 0; p < n; ++p) {
    Tensor last({3 * j});
    for (std::size_t c = 0; c < 3 * j; ++c) last[c] = frames[p](t - 1, c);
    out.push_back(scale(pose_decode(tape, decoded[p], last), 1.0 / config_.input_scale));
  }
  return out;
}

Scene PGformer::predict(const Scene& history, const Skeleton& skeleton) const {
  history.validate();
  const std::size_t t = config_.input_frames, k = config_.output_frames;
  if (history.frame_count() < t) {
    throw ContractError("predict needs at least " + std::to_string(t) + " history frames, got " +
                        std::to_string(history.frame_count()));
  }
  if (history.joint_count() != config_.joints || skeleton.joint_count() != config_.joints) {
    throw DimensionError("model expects J=" + std::to_string(config_.joints) + ", scene has J=" +
                         std::to_string(history.joint_count()) + ", skeleton has J=" +
                         std::to_string(skeleton.joint_count()));
  }
  Scene window = history.slice(history.frame_count() - t, t);
  RigidTransform to_canonical;
  if (config_.canonicalize) {
    to_canonical = canonical_transform(window, 0, skeleton);
    window = to_canonical.apply(window);
  }
  std::vector<Tensor> inputs;
  for (const auto& p : window.persons) inputs.push_back(p.frames);

  Tape tape(false);
  std::vector<Var> outs = forward(tape, inputs);
  const RigidTransform back = to_canonical.inverse();
  Scene result;
  for (std::size_t p = 0; p < outs.size(); ++p) {
    Tensor f = outs[p].value().reshaped({k, config_.joints, 3});
    if (config_.canonicalize) f = back.apply(f);
    result.persons.push_back({std::move(f), history.fps()});
  }
  return result;
}

Forecast PGformer::predict_recursive(const Scene& history, std::size_t horizon, const Skeleton& skeleton) const {
  if (horizon == 0) throw ContractError("predict_recursive: horizon must be at least one frame");
  const std::size_t t = config_.input_frames;
  if (history.frame_count() < t) {
    throw ContractError("predict_recursive needs at least " + std::to_string(t) + " history frames");
  }
  Forecast f;
  Scene window = history.slice(history.frame_count() - t, t);
  Scene produced;
  std::size_t have = 0;
  while (have < horizon) {
    Scene step = predict(window, skeleton);
    ++f.passes;
    produced = have == 0 ? step : Scene::concat_time(produced, step);
    have += step.frame_count();
    Scene extended = Scene::concat_time(window, step);
    window = extended.slice(extended.frame_count() - t, t);
  }
  f.frames = produced.slice(0, horizon);
  return f;
}

Checkpoint PGformer::to_checkpoint() const { return snapshot(store_, config_.to_text()); }

PGformer PGformer::from_checkpoint(const Checkpoint& ckpt) {
  ConfigReader reader = ConfigReader::parse(ckpt.metadata, "checkpoint config");
  PGformerConfig cfg;
  cfg.read(reader);
  reader.finish();
  PGformer model(cfg, 0);
  restore(model.store_, ckpt);
  return model;
}

}  // namespace pgformer
