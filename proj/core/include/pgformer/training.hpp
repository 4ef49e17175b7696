// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pgformer/config.hpp"
#include "pgformer/model.hpp"

namespace pgformer {

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 0.005;
  double final_decay = 0.1;          ///< lr(E) = lr0 * final_decay
  double lambda_leader = 0.01;       ///< weight of the leader gravity loss
  double lambda_follower = 0.0001;   ///< weight of the follower gravity loss
  double leader_decay_base = 10.0;   ///< leader MPJPE weight is base^(-epoch)
  bool telescoping_gravity = false;  ///< norm of the summed offsets instead of the summed norms
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_text() const;
  void read(ConfigReader& reader);
};

/// lr0 * final_decay^(epoch / E); `epoch` is zero-based, so epoch E is the
/// rate after the last epoch.
double learning_rate_at(const TrainConfig& config, std::size_t epoch);

/// Leader MPJPE weight at a zero-based epoch.
double leader_weight(const TrainConfig& config, std::size_t epoch);

/// Mean per-joint Euclidean distance. `pred` is [K x 3J] or [K x J x 3].
Var mpjpe_loss(const Var& pred, const Tensor& gt);
double mpjpe(const Tensor& pred, const Tensor& gt);

/// Per-axis softmax over joints of logits [J x 3].
Var gravity_weights(const Var& logits);
/// g_t = sum_j w_j * x_tj per axis: [K x 3].
Var gravity_center(const Var& pred, const Var& logits);
/// Sum over consecutive frames of ||g_{t+1} - g_t||; 0 when K = 1.
Var gravity_loss(const Var& pred, const Var& logits, bool telescoping = false);

struct LossTerms {
  Var leader;            ///< MPJPE of person 0
  Var follower;          ///< mean MPJPE of the other persons
  Var gravity_leader;
  Var gravity_follower;  ///< mean over the other persons
  Var total;
};

/// L = L_f + base^(-epoch) L_l + lambda_l L_gl + lambda_f L_gf.
/// Gravity terms are skipped (left invalid) when the model disables them.
LossTerms total_loss(Tape& tape, PGformer& model, const std::vector<Var>& preds, const std::vector<Tensor>& gts,
                     std::size_t epoch, const TrainConfig& config);

/// A (history, future) training window in millimetres.
struct Sample {
  Scene history;
  Scene future;
};

/// Model-ready sample: per-person [T x J x 3] inputs and [K x 3J] targets,
/// already in the canonical frame when the model asks for it.
struct PreparedSample {
  std::vector<Tensor> inputs;
  std::vector<Tensor> targets;
};

PreparedSample prepare_sample(const Sample& sample, const PGformerConfig& config, const Skeleton& skeleton);

struct EpochLog {
  std::size_t epoch = 0;  ///< one-based
  double learning_rate = 0;
  double leader = 0;
  double follower = 0;
  double gravity_leader = 0;
  double gravity_follower = 0;
  double total = 0;
  double mpjpe = 0;  ///< mean over all persons
  std::size_t steps = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t optimizer_steps = 0;
};

using EpochCallback = std::function<void(const EpochLog&, const PGformer&)>;

/// Shuffled mini-batches, one Adam step per batch, per-epoch lr decay.
TrainResult train(PGformer& model, const std::vector<Sample>& samples, const Skeleton& skeleton,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean MPJPE over persons and samples without updating the model.
double evaluate_mpjpe(const PGformer& model, const std::vector<Sample>& samples, const Skeleton& skeleton);

std::string format_loss_table(const std::vector<EpochLog>& log);
std::string format_loss_records(const std::vector<EpochLog>& log);

}  // namespace pgformer
