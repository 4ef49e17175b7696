// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pgformer/errors.hpp"
#include "pgformer/nn.hpp"
#include "pgformer/pose.hpp"

namespace pgformer {
namespace {

double energy(const Tensor& t) {
  double e = 0;
  for (double v : t.values()) e += v * v;
  return e;
}

TEST(Dct, ConstantChannelIsDcOnly) {
  const Tensor c = dct_time(Tensor({8, 1}, 2.5));
  EXPECT_NEAR(c[0], 2.5 * std::sqrt(8.0), 1e-12);
  for (std::size_t k = 1; k < 8; ++k) EXPECT_NEAR(c[k], 0.0, 1e-12);
}

TEST(Dct, SingleFrameIsIdentity) {
  const Tensor x = Tensor::matrix({{1.5, -2, 7}});
  EXPECT_LT(max_abs_diff(dct_time(x), x), 1e-15);
  EXPECT_LT(max_abs_diff(idct_time(x), x), 1e-15);
}

TEST(Dct, MatchesDirectSum) {
  Rng rng(1);
  const std::size_t n = 16;
  const Tensor x = normal({n, 3}, 1.0, rng);
  const Tensor c = dct_time(x);
  for (std::size_t k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double ref = 0;
      for (std::size_t t = 0; t < n; ++t) ref += x(t, ch) * std::cos(std::numbers::pi * (t + 0.5) * k / n);
      EXPECT_NEAR(c(k, ch), alpha * ref, 1e-12);
    }
  }
}

TEST(Idct, RoundTripFiftyFrames) {
  Rng rng(2);
  const Tensor x = normal({50, 54}, 300.0, rng);
  EXPECT_LT(max_abs_diff(idct_time(dct_time(x)), x), 1e-9);
}

TEST(Idct, ZeroCoefficientsGiveZeros) {
  EXPECT_EQ(idct_time(Tensor({6, 2})), Tensor({6, 2}));
}

TEST(Idct, UnitDcGivesHalf) {
  Tensor c({4, 1});
  c[0] = 1.0;
  const Tensor x = idct_time(c);
  for (double v : x.values()) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(Dct, ParsevalOnRandomInputs) {
  Rng rng(3);
  for (std::size_t n : {1, 2, 7, 50, 64}) {
    const Tensor x = normal({n, 5}, 10.0, rng);
    EXPECT_NEAR(std::sqrt(energy(dct_time(x))), std::sqrt(energy(x)), 1e-9) << n;
  }
}

TEST(Dct, MatrixIsOrthonormal) {
  const Tensor d = dct_matrix(9);
  EXPECT_LT(max_abs_diff(matmul(d, transpose(d)), identity(9)), 1e-12);
}

TEST(FlattenPose, SingleJoint) {
  EXPECT_EQ(flatten_pose(Tensor::matrix({{1, 2, 3}})), Tensor::vector({1, 2, 3}));
}

TEST(FlattenPose, RoundTripIsBitExact) {
  Rng rng(4);
  const Tensor frame = normal({18, 3}, 500.0, rng);
  EXPECT_EQ(unflatten_pose(flatten_pose(frame)), frame);
}

TEST(FlattenPose, BadLengthIsFormatError) {
  EXPECT_THROW(unflatten_pose(Tensor::vector({1, 2, 3, 4})), FormatError);
}

TEST(SkeletonTest, ValidationRejectsBadEdgesAndRoots) {
  Skeleton s = Skeleton::generic(5);
  EXPECT_NO_THROW(s.validate());
  Skeleton loop = s;
  loop.edges.emplace_back(3, 3);
  EXPECT_THROW(loop.validate(), FormatError);
  Skeleton out = s;
  out.edges.emplace_back(0, 5);
  EXPECT_THROW(out.validate(), FormatError);
  Skeleton dup = s;
  dup.root_joints = {0, 0};
  EXPECT_THROW(dup.validate(), FormatError);
  Skeleton none = s;
  none.root_joints.clear();
  EXPECT_THROW(none.validate(), FormatError);
}

Scene random_scene(std::size_t persons, std::size_t frames, std::size_t joints, Rng& rng) {
  Scene s;
  for (std::size_t p = 0; p < persons; ++p) s.persons.push_back({normal({frames, joints, 3}, 400.0, rng), 25.0});
  return s;
}

double max_scene_diff(const Scene& a, const Scene& b) {
  double m = 0;
  for (std::size_t p = 0; p < a.person_count(); ++p) m = std::max(m, max_abs_diff(a.persons[p].frames, b.persons[p].frames));
  return m;
}

double dist(const Tensor& a, std::size_t ta, std::size_t ja, const Tensor& b, std::size_t tb, std::size_t jb) {
  double d = 0;
  for (std::size_t k = 0; k < 3; ++k) d += std::pow(a.at3(ta, ja, k) - b.at3(tb, jb, k), 2);
  return std::sqrt(d);
}

TEST(LeaderNormalize, IdempotentOnCanonicalScene) {
  Rng rng(5);
  const Skeleton sk = Skeleton::generic(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Scene once = leader_normalize(random_scene(2, 4, 6, rng), 0, sk);
    EXPECT_LT(max_scene_diff(leader_normalize(once, 0, sk), once), 1e-9);
  }
}

TEST(LeaderNormalize, TranslationInvariant) {
  Rng rng(6);
  const Skeleton sk = Skeleton::generic(5);
  const Scene s = random_scene(2, 3, 5, rng);
  Scene moved = s;
  for (auto& p : moved.persons)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t j = 0; j < 5; ++j) p.frames.at3(t, j, 0) += 100.0;
  EXPECT_LT(max_scene_diff(leader_normalize(s, 0, sk), leader_normalize(moved, 0, sk)), 1e-9);
}

TEST(LeaderNormalize, PreservesAllPairwiseDistances) {
  Rng rng(7);
  const Skeleton sk = Skeleton::generic(4);
  const Scene s = random_scene(3, 3, 4, rng);
  const Scene n = leader_normalize(s, 0, sk);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q)
      for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t u = 0; u < 3; ++u)
          for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
              EXPECT_NEAR(dist(s.persons[p].frames, t, i, s.persons[q].frames, u, j),
                          dist(n.persons[p].frames, t, i, n.persons[q].frames, u, j), 1e-9);
}

TEST(LeaderNormalize, AnchorRootsAtOriginAndHipsOnXAxis) {
  Rng rng(8);
  const Skeleton sk = Skeleton::generic(5);
  const Scene n = leader_normalize(random_scene(2, 2, 5, rng), 1, sk);
  const Tensor& f = n.persons[1].frames;
  for (std::size_t a = 0; a < 3; ++a) {
    double c = 0;
    for (auto j : sk.root_joints) c += f.at3(0, j, a);
    EXPECT_NEAR(c, 0.0, 1e-9);
  }
  // up axis is z, so the hip vector has no y component and points along +x
  EXPECT_NEAR(f.at3(0, 1, 1) - f.at3(0, 0, 1), 0.0, 1e-9);
  EXPECT_GT(f.at3(0, 1, 0) - f.at3(0, 0, 0), 0.0);
}

TEST(LeaderNormalize, RotationIsYawOnly) {
  Rng rng(9);
  const Skeleton sk = Skeleton::generic(4);
  const RigidTransform tf = canonical_transform(random_scene(2, 2, 4, rng), 0, sk);
  EXPECT_EQ(tf.rotation[8], 1.0);
  EXPECT_EQ(tf.rotation[2], 0.0);
  EXPECT_EQ(tf.rotation[5], 0.0);
}

TEST(LeaderNormalize, DegenerateHipAxisThrows) {
  const Skeleton sk = Skeleton::generic(3);
  Scene s;
  s.persons.push_back({Tensor({1, 3, 3}), 25.0});
  s.persons.push_back({Tensor({1, 3, 3}), 25.0});
  EXPECT_THROW(leader_normalize(s, 0, sk), NormalizationError);
}

TEST(LeaderNormalize, InverseRestoresScene) {
  Rng rng(10);
  const Skeleton sk = Skeleton::generic(4);
  const Scene s = random_scene(2, 3, 4, rng);
  const RigidTransform tf = canonical_transform(s, 0, sk);
  EXPECT_LT(max_scene_diff(tf.inverse().apply(tf.apply(s)), s), 1e-9);
}

TEST(SceneTest, ValidationAndSlicing) {
  Rng rng(11);
  Scene s = random_scene(2, 6, 3, rng);
  EXPECT_NO_THROW(s.validate());
  const Scene part = s.slice(2, 3);
  EXPECT_EQ(part.frame_count(), 3u);
  EXPECT_EQ(part.persons[1].frames.at3(0, 2, 1), s.persons[1].frames.at3(2, 2, 1));
  EXPECT_THROW(s.slice(4, 3), DimensionError);
  Scene single = s;
  single.persons.pop_back();
  EXPECT_THROW(single.validate(), FormatError);
  Scene ragged = s;
  ragged.persons[1].frames = Tensor({5, 3, 3});
  EXPECT_THROW(ragged.validate(), DimensionError);
}

}  // namespace
}  // namespace pgformer
