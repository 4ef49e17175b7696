// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgformer/nn.hpp"

namespace pgformer {

/// How the template-derived proxy enters the shared attention map.
enum class ProxyMode {
  off,            ///< A = Q_l Q_f^T
  bilinear,       ///< A = Q_l P Q_f^T with P = T^T W_t^T W_t T  (D x D)
  gate_multiply,  ///< A = (Q_l Q_f^T) * P'  elementwise, P' = W_t T T^T W_t^T  (T x T)
  gate_add,       ///< A = Q_l Q_f^T + P'
};

std::string to_string(ProxyMode mode);
ProxyMode parse_proxy_mode(const std::string& name);

/// Parameters of one cross-query attention block.
struct XqaParams {
  Linear query;                          ///< D -> D, shared by both persons by default
  std::optional<Linear> follower_query;  ///< set when the persons use separate projections
  Linear template_weights;               ///< 2D -> M, produces W_t
  ProxyMode mode = ProxyMode::bilinear;
  std::size_t heads = 1;

  static XqaParams create(ParameterStore& store, const std::string& group, std::size_t width,
                          std::size_t templates, ProxyMode mode, std::size_t heads, bool separate_queries,
                          Rng& rng);
  std::size_t width() const { return query.in_features(); }
};

/// Projections of the attention that predicts decoder templates from encoder ones.
struct FutureTemplateParams {
  Linear query;
  Linear key;
  Linear value;

  static FutureTemplateParams create(ParameterStore& store, const std::string& group, std::size_t width, Rng& rng);
};

/// Q = ReLU(FC(E)) for both streams.
std::pair<Var, Var> cross_queries(Tape& tape, const Var& e_l, const Var& e_f, const XqaParams& params);

/// W_t = FC(concat_channels(E_l, E_f)), [T x M].
Var template_weights(Tape& tape, const Var& e_l, const Var& e_f, const XqaParams& params);

/// Symmetric PSD proxy P = T^T W_t^T W_t T, [D x D].
Var build_proxy(Tape& tape, const Var& e_l, const Var& e_f, const Var& templates, const XqaParams& params);

/// Temporal proxy P' = W_t T T^T W_t^T, [T x T], used by the gate variants.
Var build_temporal_proxy(Tape& tape, const Var& e_l, const Var& e_f, const Var& templates, const XqaParams& params);

/// A = Q_l Q_f^T, or Q_l P Q_f^T when a proxy is given. No 1/sqrt(D) scaling.
Var shared_attention(const Var& q_l, const Var& q_f, const std::optional<Var>& proxy = std::nullopt);

/// Combines A with P' for the gate modes; any other mode is a ConfigError.
Var gate_variants(const Var& attention, const Var& temporal_proxy, ProxyMode mode);

/// O_l = SM(A) E_f and O_f = SM(A^T) E_l, with one map A shared by both directions.
std::pair<Var, Var> xqa_forward(Tape& tape, const Var& e_l, const Var& e_f, const Var& templates,
                                const XqaParams& params);

/// T_de = softmax((T_q Wq)(T_en Wk)^T / sqrt(D)) (T_en Wv).
Var future_templates(Tape& tape, const Var& t_en, const Var& t_q, const FutureTemplateParams& params);

/// n-person form: each person attends over the time-concatenated others and
/// only its own output is kept. Parameters are shared across persons.
std::vector<Var> xqa_multi(Tape& tape, const std::vector<Var>& streams, const Var& templates,
                           const XqaParams& params);

}  // namespace pgformer
