// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pgformer/checkpoint.hpp"
#include "pgformer/config.hpp"
#include "pgformer/nn.hpp"
#include "pgformer/pose.hpp"
#include "pgformer/xqa.hpp"

namespace pgformer {

/// Architecture hyperparameters and ablation switches.
struct PGformerConfig {
  std::size_t layers = 4;         ///< encoder and decoder depth
  std::size_t width = 128;        ///< model width D
  std::size_t heads = 4;          ///< self/cross attention heads
  std::size_t head_width = 64;    ///< width of one attention head
  std::size_t ffn_width = 1024;
  std::size_t templates = 3;      ///< template vectors M behind the proxy
  std::size_t query_window = 3;   ///< frames squeezed into the decoder query
  std::size_t input_frames = 50;  ///< T
  std::size_t output_frames = 10; ///< K
  std::size_t joints = 18;        ///< J
  double fps = 25.0;

  bool use_dct = true;
  bool use_xqa = true;
  bool use_proxy = true;
  ProxyMode proxy_mode = ProxyMode::bilinear;
  bool use_gravity_loss = true;

  bool separate_queries = false;  ///< per-person query projections in XQA
  std::size_t xqa_heads = 1;
  bool xqa_residual = true;       ///< add the XQA output onto its input stream
  std::size_t gcn_layers = 4;
  std::size_t gcn_hidden = 32;
  double input_scale = 1e-3;      ///< millimetres -> network units
  bool canonicalize = true;       ///< predict in the leader's canonical frame

  ProxyMode effective_proxy() const noexcept { return use_proxy ? proxy_mode : ProxyMode::off; }
  void validate() const;

  std::string to_text() const;
  void read(ConfigReader& reader);
};

/// Multi-head scaled dot-product attention with input/output projections.
struct MultiHeadAttention {
  Linear query, key, value, output;
  std::size_t heads = 1;
  std::size_t head_width = 1;

  static MultiHeadAttention create(ParameterStore& store, const std::string& group, std::size_t width,
                                   std::size_t heads, std::size_t head_width, Rng& rng);
  Var operator()(Tape& tape, const Var& queries, const Var& keys_values) const;
};

struct FeedForward {
  Linear expand, contract;

  static FeedForward create(ParameterStore& store, const std::string& group, std::size_t width,
                            std::size_t hidden, Rng& rng);
  Var operator()(Tape& tape, const Var& x) const;
};

struct EncoderLayer {
  LayerNorm attn_norm, ffn_norm, xqa_norm;
  MultiHeadAttention self_attention;
  FeedForward ffn;
  std::optional<XqaParams> xqa;
};

struct DecoderLayer {
  LayerNorm self_norm, cross_norm, ffn_norm, xqa_norm;
  MultiHeadAttention self_attention, cross_attention;
  FeedForward ffn;
  std::optional<XqaParams> xqa;
};

/// Per-token joint graph network with a residual across the block.
struct GcnDecoder {
  Linear projection;                 ///< D -> 3J per token
  Parameter* adjacency = nullptr;    ///< [J x J], used as (A + A^T) / 2
  std::vector<Parameter*> weights;   ///< bias-free feature transforms 3 -> h -> ... -> 3
};

/// K predicted frames per person plus the number of model passes used.
struct Forecast {
  Scene frames;
  std::size_t passes = 0;
};

Tensor positional_encoding(std::size_t first_position, std::size_t count, std::size_t width);

class PGformer {
 public:
  PGformer(PGformerConfig config, std::uint64_t seed);

  PGformer(PGformer&&) noexcept = default;
  PGformer& operator=(PGformer&&) noexcept = default;
  PGformer(const PGformer&) = delete;
  PGformer& operator=(const PGformer&) = delete;

  const PGformerConfig& config() const noexcept { return config_; }
  ParameterStore& parameters() noexcept { return store_; }
  const ParameterStore& parameters() const noexcept { return store_; }

  /// Gravity logits [J x 3]; role 0 is the leader, role 1 every other person.
  Parameter& gravity_logits(std::size_t role) noexcept { return *gravity_[role == 0 ? 0 : 1]; }

  // Stages, all in network units ([T x 3J] rows per person).

  /// FC 3J -> D per token plus sinusoidal positions.
  Var pose_encode(Tape& tape, const Tensor& history_tokens) const;

  struct EncoderOutput {
    std::vector<Var> states;  ///< [T x D] per person
    Var templates;            ///< T_en
  };
  EncoderOutput encoder_forward(Tape& tape, std::vector<Var> embeddings) const;

  /// K copies of the squeezed query vector plus positions, [K x D].
  Var build_queries(Tape& tape, const Tensor& history_frames, bool last_frame_only = false) const;

  std::vector<Var> decoder_forward(Tape& tape, std::vector<Var> queries, const std::vector<Var>& memory,
                                   const Var& encoder_templates) const;

  /// Projection, last-observation token, GCN and inverse DCT; returns [K x 3J].
  Var pose_decode(Tape& tape, const Var& decoded, const Tensor& last_frame) const;

  /// Full pass on millimetre histories (n x [T x J x 3]); returns n x [K x 3J] in mm.
  std::vector<Var> forward(Tape& tape, const std::vector<Tensor>& histories) const;

  /// Predicts K frames from the most recent T frames of `history`.
  Scene predict(const Scene& history, const Skeleton& skeleton) const;
  /// Repeated K-frame passes over a rolling T-frame window, truncated to `horizon`.
  Forecast predict_recursive(const Scene& history, std::size_t horizon, const Skeleton& skeleton) const;

  Checkpoint to_checkpoint() const;
  static PGformer from_checkpoint(const Checkpoint& ckpt);

  const std::vector<EncoderLayer>& encoder_layers() const noexcept { return encoder_; }
  const std::vector<DecoderLayer>& decoder_layers() const noexcept { return decoder_; }

 private:
  std::vector<Var> cross_person(Tape& tape, const std::vector<Var>& streams, const Var& templates,
                                const XqaParams& xqa) const;
  Var symmetric_adjacency(Tape& tape) const;

  PGformerConfig config_;
  ParameterStore store_;
  Linear pose_embedding_;
  Linear query_embedding_;
  Linear query_squeeze_;
  Parameter* encoder_templates_ = nullptr;
  Parameter* future_queries_ = nullptr;
  FutureTemplateParams future_attention_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  GcnDecoder gcn_;
  std::array<Parameter*, 2> gravity_{};
  Tensor encoder_positions_;
  Tensor decoder_positions_;
};

}  // namespace pgformer
