// SPDX-License-Identifier: Apache-2.0
#include "pgformer/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pgformer/adam.hpp"
#include "pgformer/errors.hpp"

namespace pgformer {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train config: epochs must be positive");
  if (batch_size == 0) throw ConfigError("train config: batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be positive");
  if (!(final_decay > 0.0)) throw ConfigError("train config: final_decay must be positive");
  if (lambda_leader < 0.0 || lambda_follower < 0.0) throw ConfigError("train config: gravity weights must be >= 0");
  if (!(leader_decay_base > 0.0)) throw ConfigError("train config: leader_decay_base must be positive");
}

std::string TrainConfig::to_text() const {
  ConfigWriter w;
  w.write("epochs", epochs);
  w.write("batch_size", batch_size);
  w.write("learning_rate", learning_rate);
  w.write("final_decay", final_decay);
  w.write("lambda_leader", lambda_leader);
  w.write("lambda_follower", lambda_follower);
  w.write("leader_decay_base", leader_decay_base);
  w.write("telescoping_gravity", telescoping_gravity);
  return w.text();
}

void TrainConfig::read(ConfigReader& r) {
  r.read("epochs", epochs);
  r.read("batch_size", batch_size);
  r.read("learning_rate", learning_rate);
  r.read("final_decay", final_decay);
  r.read("lambda_leader", lambda_leader);
  r.read("lambda_follower", lambda_follower);
  r.read("leader_decay_base", leader_decay_base);
  r.read("telescoping_gravity", telescoping_gravity);
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) {
  return config.learning_rate *
         std::pow(config.final_decay, static_cast<double>(epoch) / static_cast<double>(config.epochs));
}

double leader_weight(const TrainConfig& config, std::size_t epoch) {
  return std::pow(config.leader_decay_base, -static_cast<double>(epoch));
}

Var mpjpe_loss(const Var& pred, const Tensor& gt) {
  if (pred.value().size() != gt.size() || gt.size() % 3 != 0) {
    throw DimensionError("mpjpe: prediction " + pred.value().shape_string() + " vs ground truth " + gt.shape_string());
  }
  Tape& tape = *pred.tape();
  const std::size_t points = gt.size() / 3;
  Var diff = sub(reshape(pred, {points, 3}), tape.constant(gt.reshaped({points, 3})));
  return mean(row_norms(diff));
}

double mpjpe(const Tensor& pred, const Tensor& gt) {
  if (pred.size() != gt.size() || gt.size() % 3 != 0) {
    throw DimensionError("mpjpe: prediction " + pred.shape_string() + " vs ground truth " + gt.shape_string());
  }
  const std::size_t points = gt.size() / 3;
  double acc = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double dx = pred[3 * i] - gt[3 * i], dy = pred[3 * i + 1] - gt[3 * i + 1], dz = pred[3 * i + 2] - gt[3 * i + 2];
    acc += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return acc / static_cast<double>(points);
}

Var gravity_weights(const Var& logits) { return transpose(softmax_rows(transpose(logits))); }

Var gravity_center(const Var& pred, const Var& logits) {
  const std::size_t j = logits.value().dim(0);
  if (logits.value().rank() != 2 || logits.cols() != 3 || pred.value().size() % (3 * j) != 0) {
    throw DimensionError("gravity_center: prediction " + pred.value().shape_string() + " vs weights " +
                         logits.value().shape_string());
  }
  Tape& tape = *pred.tape();
  const std::size_t k = pred.value().size() / (3 * j);
  Var w = reshape(gravity_weights(logits), {3 * j});
  Var weighted = mul_row(reshape(pred, {k, 3 * j}), w);
  Tensor selector({3 * j, 3});
  for (std::size_t jj = 0; jj < j; ++jj)
    for (std::size_t a = 0; a < 3; ++a) selector(3 * jj + a, a) = 1.0;
  return matmul(weighted, tape.constant(std::move(selector)));
}

Var gravity_loss(const Var& pred, const Var& logits, bool telescoping) {
  Var g = gravity_center(pred, logits);
  const std::size_t k = g.rows();
  if (k < 2) return pred.tape()->constant(Tensor::scalar(0.0));
  Var delta = sub(slice_rows(g, 1, k - 1), slice_rows(g, 0, k - 1));
  if (telescoping) {
    Tensor ones({1, k - 1}, 1.0);
    return sum(row_norms(matmul(pred.tape()->constant(std::move(ones)), delta)));
  }
  return sum(row_norms(delta));
}

LossTerms total_loss(Tape& tape, PGformer& model, const std::vector<Var>& preds, const std::vector<Tensor>& gts,
                     std::size_t epoch, const TrainConfig& config) {
  if (preds.size() < 2 || preds.size() != gts.size()) {
    throw DimensionError("total_loss needs matching predictions and targets for at least two persons");
  }
  LossTerms t;
  t.leader = mpjpe_loss(preds[0], gts[0]);
  std::vector<Var> fl;
  for (std::size_t p = 1; p < preds.size(); ++p) fl.push_back(mpjpe_loss(preds[p], gts[p]));
  t.follower = fl.size() == 1 ? fl.front() : elementwise_mean(fl);
  t.total = add(t.follower, scale(t.leader, leader_weight(config, epoch)));
  if (model.config().use_gravity_loss) {
    Var wl = tape.parameter(model.gravity_logits(0));
    Var wf = tape.parameter(model.gravity_logits(1));
    t.gravity_leader = gravity_loss(preds[0], wl, config.telescoping_gravity);
    std::vector<Var> gf;
    for (std::size_t p = 1; p < preds.size(); ++p) gf.push_back(gravity_loss(preds[p], wf, config.telescoping_gravity));
    t.gravity_follower = gf.size() == 1 ? gf.front() : elementwise_mean(gf);
    t.total = add(t.total, add(scale(t.gravity_leader, config.lambda_leader),
                               scale(t.gravity_follower, config.lambda_follower)));
  }
  return t;
}

PreparedSample prepare_sample(const Sample& sample, const PGformerConfig& config, const Skeleton& skeleton) {
  const std::size_t t = config.input_frames, k = config.output_frames;
  if (sample.history.frame_count() != t || sample.future.frame_count() != k) {
    throw DimensionError("sample window is " + std::to_string(sample.history.frame_count()) + "+" +
                         std::to_string(sample.future.frame_count()) + " frames, model expects " + std::to_string(t) +
                         "+" + std::to_string(k));
  }
  if (sample.history.joint_count() != config.joints) {
    throw DimensionError("sample has J=" + std::to_string(sample.history.joint_count()) + ", model expects J=" +
                         std::to_string(config.joints));
  }
  Scene history = sample.history, future = sample.future;
  if (config.canonicalize) {
    const RigidTransform tf = canonical_transform(history, 0, skeleton);
    history = tf.apply(history);
    future = tf.apply(future);
  }
  PreparedSample out;
  for (std::size_t p = 0; p < history.person_count(); ++p) {
    out.inputs.push_back(history.persons[p].frames);
    out.targets.push_back(future.persons[p].frames.reshaped({k, 3 * config.joints}));
  }
  return out;
}

TrainResult train(PGformer& model, const std::vector<Sample>& samples, const Skeleton& skeleton,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (samples.empty()) throw ContractError("train: the dataset is empty");
  std::vector<PreparedSample> prepared;
  prepared.reserve(samples.size());
  for (const auto& s : samples) prepared.push_back(prepare_sample(s, model.config(), skeleton));

  Adam adam(model.parameters(), AdamConfig{config.learning_rate});
  Rng rng(config.seed);
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    adam.set_learning_rate(learning_rate_at(config, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch + 1;
    log.learning_rate = adam.learning_rate();
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      model.parameters().zero_grad();
      for (std::size_t i = begin; i < end; ++i) {
        const PreparedSample& s = prepared[order[i]];
        Tape tape;
        std::vector<Var> preds = model.forward(tape, s.inputs);
        LossTerms terms = total_loss(tape, model, preds, s.targets, epoch, config);
        tape.backward(scale(terms.total, inv_batch));
        log.leader += terms.leader.value().item();
        log.follower += terms.follower.value().item();
        if (terms.gravity_leader.valid()) {
          log.gravity_leader += terms.gravity_leader.value().item();
          log.gravity_follower += terms.gravity_follower.value().item();
        }
        log.total += terms.total.value().item();
        const double n = static_cast<double>(preds.size());
        log.mpjpe += (terms.leader.value().item() + terms.follower.value().item() * (n - 1.0)) / n;
      }
      adam.step();
      ++log.steps;
    }
    const double count = static_cast<double>(prepared.size());
    log.leader /= count;
    log.follower /= count;
    log.gravity_leader /= count;
    log.gravity_follower /= count;
    log.total /= count;
    log.mpjpe /= count;
    result.optimizer_steps += log.steps;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log, model);
  }
  return result;
}

double evaluate_mpjpe(const PGformer& model, const std::vector<Sample>& samples, const Skeleton& skeleton) {
  if (samples.empty()) throw ContractError("evaluate_mpjpe: no samples");
  double acc = 0.0;
  for (const auto& s : samples) {
    const PreparedSample p = prepare_sample(s, model.config(), skeleton);
    Tape tape(false);
    std::vector<Var> preds = model.forward(tape, p.inputs);
    double person_acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) person_acc += mpjpe(preds[i].value(), p.targets[i]);
    acc += person_acc / static_cast<double>(preds.size());
  }
  return acc / static_cast<double>(samples.size());
}

std::string format_loss_table(const std::vector<EpochLog>& log) {
  std::string out = "epoch        lr          L_f          L_l         L_gl         L_gf        total\n";
  char line[160];
  for (const auto& e : log) {
    std::snprintf(line, sizeof(line), "%5zu %10.3e %12.4f %12.4f %12.4f %12.4f %12.4f\n", e.epoch, e.learning_rate,
                  e.follower, e.leader, e.gravity_leader, e.gravity_follower, e.total);
    out += line;
  }
  return out;
}

std::string format_loss_records(const std::vector<EpochLog>& log) {
  std::string out = "epoch,lr,L_f,L_l,L_gl,L_gf,total,mpjpe\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + "," + format_double(e.learning_rate) + "," + format_double(e.follower) + "," +
           format_double(e.leader) + "," + format_double(e.gravity_leader) + "," + format_double(e.gravity_follower) +
           "," + format_double(e.total) + "," + format_double(e.mpjpe) + "\n";
  }
  return out;
}

}  // namespace pgformer
