// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "pgformer/errors.hpp"
#include "pgformer/gradcheck.hpp"
#include "pgformer/synth.hpp"
#include "pgformer/training.hpp"
#include "support.hpp"

namespace pgformer {
namespace {

using test::random_tensor;

double loop_mpjpe(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.size() / 3;
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0;
    for (std::size_t k = 0; k < 3; ++k) d += std::pow(a[3 * i + k] - b[3 * i + k], 2);
    s += std::sqrt(d);
  }
  return s / static_cast<double>(n);
}

double loss_of(const Tensor& pred, const Tensor& gt) {
  Tape tape(false);
  return mpjpe_loss(tape.constant(pred), gt).value().item();
}

TEST(Mpjpe, ZeroForExactPrediction) {
  Rng rng(1);
  const Tensor x = random_tensor({3, 4, 3}, rng);
  EXPECT_EQ(loss_of(x, x), 0.0);
}

TEST(Mpjpe, ThreeFourFiveOffset) {
  Rng rng(2);
  const Tensor x = random_tensor({2, 5, 3}, rng);
  Tensor y = x;
  for (std::size_t i = 0; i < 10; ++i) {
    y[3 * i] += 3.0;
    y[3 * i + 2] += 4.0;
  }
  EXPECT_NEAR(loss_of(x, y), 5.0, 1e-12);
}

TEST(Mpjpe, MatchesLoop) {
  Rng rng(3);
  const Tensor x = random_tensor({2, 3, 3}, rng, 50.0), y = random_tensor({2, 3, 3}, rng, 50.0);
  EXPECT_NEAR(loss_of(x, y), loop_mpjpe(x, y), 1e-12);
  EXPECT_NEAR(mpjpe(x, y), loop_mpjpe(x, y), 1e-12);
}

TEST(Mpjpe, ShapeMismatchThrows) {
  EXPECT_THROW(loss_of(Tensor({2, 3, 3}), Tensor({2, 4, 3})), DimensionError);
}

Tensor center_of(const Tensor& pred, const Tensor& logits) {
  Tape tape(false);
  return gravity_center(tape.constant(pred), tape.constant(logits)).value();
}

TEST(GravityCenter, ZeroLogitsGiveCentroid) {
  Rng rng(4);
  const Tensor x = random_tensor({3, 4, 3}, rng);
  const Tensor g = center_of(x, Tensor({4, 3}));
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t a = 0; a < 3; ++a) {
      double c = 0;
      for (std::size_t j = 0; j < 4; ++j) c += x.at3(t, j, a) / 4.0;
      EXPECT_NEAR(g(t, a), c, 1e-12);
    }
}

TEST(GravityCenter, DominantLogitSelectsJoint) {
  Rng rng(5);
  const Tensor x = random_tensor({2, 4, 3}, rng, 100.0);
  Tensor logits({4, 3});
  for (std::size_t a = 0; a < 3; ++a) logits(2, a) = 1e6;
  const Tensor g = center_of(x, logits);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(g(t, a), x.at3(t, 2, a), 1e-9);
}

TEST(GravityCenter, MatchesWeightedSum) {
  Rng rng(6);
  const Tensor x = random_tensor({3, 5, 3}, rng, 100.0), logits = random_tensor({5, 3}, rng);
  const Tensor g = center_of(x, logits);
  for (std::size_t a = 0; a < 3; ++a) {
    double z = 0;
    for (std::size_t j = 0; j < 5; ++j) z += std::exp(logits(j, a));
    for (std::size_t t = 0; t < 3; ++t) {
      double ref = 0;
      for (std::size_t j = 0; j < 5; ++j) ref += std::exp(logits(j, a)) / z * x.at3(t, j, a);
      EXPECT_NEAR(g(t, a), ref, 1e-12);
    }
  }
}

TEST(GravityWeights, ColumnsSumToOne) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Tape tape(false);
    const Tensor w = gravity_weights(tape.constant(random_tensor({6, 3}, rng, 20.0))).value();
    for (std::size_t a = 0; a < 3; ++a) {
      double s = 0;
      for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_GE(w(j, a), 0.0);
        s += w(j, a);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

double gravity_of(const Tensor& pred, const Tensor& logits, bool telescoping = false) {
  Tape tape(false);
  return gravity_loss(tape.constant(pred), tape.constant(logits), telescoping).value().item();
}

TEST(GravityLoss, StaticPredictionIsZero) {
  Rng rng(8);
  const Tensor frame = random_tensor({1, 4, 3}, rng);
  Tensor x({3, 4, 3});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < 12; ++i) x[t * 12 + i] = frame[i];
  EXPECT_EQ(gravity_of(x, random_tensor({4, 3}, rng)), 0.0);
}

TEST(GravityLoss, TwoMillimetresPerFrame) {
  Rng rng(9);
  Tensor x = random_tensor({3, 4, 3}, rng);
  for (std::size_t t = 1; t < 3; ++t)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t a = 0; a < 3; ++a) x.at3(t, j, a) = x.at3(0, j, a) + (a == 0 ? 2.0 * t : 0.0);
  EXPECT_NEAR(gravity_of(x, Tensor({4, 3})), 4.0, 1e-12);
}

TEST(GravityLoss, MatchesPerStepNorms) {
  Rng rng(10);
  const Tensor x = random_tensor({5, 4, 3}, rng, 30.0), logits = random_tensor({4, 3}, rng);
  const Tensor g = center_of(x, logits);
  double ref = 0;
  for (std::size_t t = 0; t + 1 < 5; ++t) {
    double d = 0;
    for (std::size_t a = 0; a < 3; ++a) d += std::pow(g(t + 1, a) - g(t, a), 2);
    ref += std::sqrt(d);
  }
  EXPECT_NEAR(gravity_of(x, logits), ref, 1e-12);
  double tele = 0;
  for (std::size_t a = 0; a < 3; ++a) tele += std::pow(g(4, a) - g(0, a), 2);
  EXPECT_NEAR(gravity_of(x, logits, true), std::sqrt(tele), 1e-12);
}

TEST(GravityLoss, SingleFrameIsZero) {
  Rng rng(11);
  EXPECT_EQ(gravity_of(random_tensor({1, 4, 3}, rng), Tensor({4, 3})), 0.0);
}

TEST(GravityLoss, TranslationInvariant) {
  Rng rng(12);
  const Tensor x = random_tensor({4, 4, 3}, rng, 30.0), logits = random_tensor({4, 3}, rng);
  Tensor moved = x;
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += (i % 3 == 0 ? 250.0 : i % 3 == 1 ? -90.0 : 13.0);
  EXPECT_NEAR(gravity_of(moved, logits), gravity_of(x, logits), 1e-12);
}

TEST(GravityLoss, GradientThroughWeightsMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Tensor x = random_tensor({4, 3, 3}, rng, 2.0);
    auto fn = [](Tape&, const std::vector<Var>& v) { return gravity_loss(v[0], v[1]); };
    EXPECT_LT(test::fd_relative_error(fn, {x, random_tensor({3, 3}, rng)}), 1e-5) << seed;
  }
}

TEST(Schedule, DecaysToOneTenth) {
  TrainConfig c;
  EXPECT_EQ(learning_rate_at(c, 0), 0.005);
  EXPECT_NEAR(learning_rate_at(c, c.epochs), 0.0005, 1e-12);
  EXPECT_NEAR(learning_rate_at(c, 20), 0.005 * std::pow(0.1, 0.5), 1e-15);
}

TEST(Schedule, LeaderWeight) {
  TrainConfig c;
  EXPECT_EQ(leader_weight(c, 0), 1.0);
  EXPECT_NEAR(leader_weight(c, 1), 0.1, 1e-15);
  EXPECT_NEAR(leader_weight(c, 5), 1e-5, 1e-20);
}

struct LossFixture {
  PGformerConfig cfg;
  PGformer model;
  LossFixture() : cfg(make()), model(cfg, 3) {}
  static PGformerConfig make() {
    PGformerConfig c = tiny_config();
    c.output_frames = 3;
    return c;
  }
  LossTerms terms(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts, std::size_t epoch,
                  Tape& tape) {
    std::vector<Var> p;
    for (const auto& t : preds) p.push_back(tape.constant(t.reshaped({3, 12})));
    return total_loss(tape, model, p, gts, epoch, TrainConfig{});
  }
};

TEST(TotalLoss, EpochZeroWithoutGravity) {
  LossFixture f;
  f.cfg.use_gravity_loss = false;
  PGformer m(f.cfg, 1);
  Rng rng(13);
  std::vector<Tensor> preds{random_tensor({3, 4, 3}, rng), random_tensor({3, 4, 3}, rng)};
  std::vector<Tensor> gts{random_tensor({3, 4, 3}, rng), random_tensor({3, 4, 3}, rng)};
  Tape tape(false);
  std::vector<Var> p{tape.constant(preds[0].reshaped({3, 12})), tape.constant(preds[1].reshaped({3, 12}))};
  const LossTerms t = total_loss(tape, m, p, gts, 0, TrainConfig{});
  EXPECT_NEAR(t.total.value().item(), mpjpe(preds[0], gts[0]) + mpjpe(preds[1], gts[1]), 1e-12);
}

TEST(TotalLoss, ExactCombination) {
  LossFixture f;
  Rng rng(14);
  f.model.gravity_logits(0).value = random_tensor({4, 3}, rng);
  f.model.gravity_logits(1).value = random_tensor({4, 3}, rng);
  std::vector<Tensor> preds{random_tensor({3, 4, 3}, rng, 10.0), random_tensor({3, 4, 3}, rng, 10.0)};
  std::vector<Tensor> gts{random_tensor({3, 4, 3}, rng, 10.0), random_tensor({3, 4, 3}, rng, 10.0)};
  Tape tape(false);
  const LossTerms t = f.terms(preds, gts, 1, tape);
  const double gl = gravity_of(preds[0], f.model.gravity_logits(0).value);
  const double gf = gravity_of(preds[1], f.model.gravity_logits(1).value);
  EXPECT_NEAR(t.leader.value().item(), mpjpe(preds[0], gts[0]), 1e-12);
  EXPECT_NEAR(t.total.value().item(),
              mpjpe(preds[1], gts[1]) + 0.1 * mpjpe(preds[0], gts[0]) + 0.01 * gl + 0.0001 * gf, 1e-12);
}

TEST(TotalLoss, PerfectStaticPredictionIsZero) {
  LossFixture f;
  Rng rng(15);
  const Tensor frame = random_tensor({1, 4, 3}, rng);
  Tensor x({3, 4, 3});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < 12; ++i) x[t * 12 + i] = frame[i];
  Tape tape(false);
  EXPECT_EQ(f.terms({x, x}, {x, x}, 0, tape).total.value().item(), 0.0);
}

TEST(TotalLoss, NonNegative) {
  LossFixture f;
  Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    Tape tape(false);
    EXPECT_GE(f.terms({random_tensor({3, 4, 3}, rng), random_tensor({3, 4, 3}, rng)},
                      {random_tensor({3, 4, 3}, rng), random_tensor({3, 4, 3}, rng)}, trial, tape)
                  .total.value()
                  .item(),
              0.0);
  }
}

std::vector<Sample> synthetic_samples(const PGformerConfig& c, std::size_t count, std::uint64_t seed) {
  SyntheticConfig sc;
  sc.n_sequences = count;
  sc.frames = c.input_frames + c.output_frames;
  sc.joints = c.joints;
  sc.seed = seed;
  std::vector<Sample> out;
  for (const auto& s : synth_coupled(sc))
    out.push_back({s.scene.slice(0, c.input_frames), s.scene.slice(c.input_frames, c.output_frames)});
  return out;
}

TEST(Train, OneSampleOneEpochOneStep) {
  PGformer m(tiny_config(), 1);
  TrainConfig tc;
  tc.epochs = 1;
  const TrainResult r = train(m, synthetic_samples(tiny_config(), 1, 2), Skeleton::generic(4), tc);
  EXPECT_EQ(r.optimizer_steps, 1u);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].steps, 1u);
}

TEST(Train, BatchesPerEpoch) {
  PGformer m(tiny_config(), 1);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 2;
  const TrainResult r = train(m, synthetic_samples(tiny_config(), 5, 3), Skeleton::generic(4), tc);
  EXPECT_EQ(r.optimizer_steps, 6u);
}

TEST(Train, FixedSeedReproducesLog) {
  const auto samples = synthetic_samples(tiny_config(), 4, 4);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 2;
  tc.seed = 9;
  PGformer a(tiny_config(), 5), b(tiny_config(), 5);
  EXPECT_EQ(format_loss_records(train(a, samples, Skeleton::generic(4), tc).log),
            format_loss_records(train(b, samples, Skeleton::generic(4), tc).log));
}

TEST(Train, LearningRateReachesOneTenth) {
  PGformer m(tiny_config(), 1);
  TrainConfig tc;
  tc.epochs = 4;
  const TrainResult r = train(m, synthetic_samples(tiny_config(), 1, 2), Skeleton::generic(4), tc);
  EXPECT_EQ(r.log.front().learning_rate, tc.learning_rate);
  EXPECT_NEAR(learning_rate_at(tc, tc.epochs), tc.learning_rate / 10, 1e-12);
}

TEST(Train, EmptyDatasetThrows) {
  PGformer m(tiny_config(), 1);
  EXPECT_ANY_THROW(train(m, {}, Skeleton::generic(4), TrainConfig{}));
}

TEST(Train, LossLogFormats) {
  PGformer m(tiny_config(), 1);
  TrainConfig tc;
  tc.epochs = 2;
  const TrainResult r = train(m, synthetic_samples(tiny_config(), 2, 2), Skeleton::generic(4), tc);
  const std::string table = format_loss_table(r.log);
  for (const char* col : {"epoch", "lr", "L_f", "L_l", "L_gl", "L_gf", "total"})
    EXPECT_NE(table.find(col), std::string::npos) << col;
  const std::string csv = format_loss_records(r.log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,lr,L_f,L_l,L_gl,L_gf,total,mpjpe");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(TrainConfigText, RoundTripAndValidation) {
  TrainConfig c;
  c.epochs = 7;
  c.telescoping_gravity = true;
  ConfigReader r = ConfigReader::parse(c.to_text());
  TrainConfig back;
  back.read(r);
  r.finish();
  EXPECT_EQ(back.to_text(), c.to_text());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace pgformer
