// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <set>

#include "pgformer/data.hpp"
#include "pgformer/errors.hpp"
#include "pgformer/synth.hpp"
#include "support.hpp"

namespace pgformer {
namespace {

using test::random_tensor;

MotionFile sample_file(std::uint64_t seed = 1) {
  Rng rng(seed);
  MotionFile f;
  f.fps = 30.0;
  f.skeleton = Skeleton::generic(4);
  for (std::size_t s = 0; s < 2; ++s) {
    Scene sc;
    for (std::size_t p = 0; p < 2 + s; ++p) sc.persons.push_back({random_tensor({3 + s, 4, 3}, rng, 500.0), 30.0});
    f.sequences.push_back({"seq" + std::to_string(s), s == 0 ? "dance" : "", sc});
  }
  return f;
}

TEST(MotionFormat, RoundTripIsBitExact) {
  const MotionFile f = sample_file();
  const MotionFile back = decode_motion_file(encode_motion_file(f));
  EXPECT_EQ(back.fps, f.fps);
  EXPECT_EQ(back.skeleton, f.skeleton);
  ASSERT_EQ(back.sequences.size(), 2u);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(back.sequences[s].name, f.sequences[s].name);
    EXPECT_EQ(back.sequences[s].label, f.sequences[s].label);
    for (std::size_t p = 0; p < f.sequences[s].scene.person_count(); ++p) {
      const Tensor& a = back.sequences[s].scene.persons[p].frames;
      const Tensor& b = f.sequences[s].scene.persons[p].frames;
      ASSERT_EQ(a.shape(), b.shape());
      EXPECT_EQ(std::memcmp(a.raw(), b.raw(), 8 * a.size()), 0);
    }
  }
}

TEST(MotionFormat, SaveLoadThroughDisk) {
  const auto path = std::filesystem::temp_directory_path() / "pgformer_data_test.motion";
  const MotionFile f = sample_file(2);
  save_scene_file(path.string(), f);
  const MotionFile back = load_scene_file(path.string());
  EXPECT_EQ(back.sequences[1].scene.persons[2].frames, f.sequences[1].scene.persons[2].frames);
  std::filesystem::remove(path);
}

TEST(MotionFormat, TruncationNamesByteOffset) {
  std::string bytes = encode_motion_file(sample_file());
  bytes.resize(bytes.size() - 5);
  try {
    decode_motion_file(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
  }
}

TEST(MotionFormat, NanNamesFramePersonJoint) {
  MotionFile f = sample_file();
  std::string bytes = encode_motion_file(f);
  // Second sequence, frame 1, person 2, joint 3, axis 0; sequence 0 holds 72 values, 216 in total.
  const std::size_t index = 72 + ((1 * 3 + 2) * 4 + 3) * 3;
  const std::size_t offset = bytes.size() - 8 * 216 + 8 * index;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(bytes.data() + offset, &nan, 8);
  try {
    decode_motion_file(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("seq1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("frame 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("person 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("joint 3"), std::string::npos) << msg;
  }
}

TEST(MotionFormat, VersionMismatchRejected) {
  std::string bytes = encode_motion_file(sample_file());
  ASSERT_EQ(bytes.rfind("PGMOTION 1", 0), 0u);
  bytes[9] = '7';
  EXPECT_THROW(decode_motion_file(bytes), FormatError);
}

TEST(MotionFormat, MissingFileIsError) {
  EXPECT_ANY_THROW(load_scene_file("/nonexistent/dir/file.motion"));
}

TEST(Windows, ExactLengthGivesOne) {
  Rng rng(3);
  Scene s;
  for (int p = 0; p < 2; ++p) s.persons.push_back({random_tensor({7, 3, 3}, rng), 25.0});
  EXPECT_EQ(make_windows(s, 5, 2).size(), 1u);
  EXPECT_TRUE(make_windows(s, 6, 2).empty());
}

TEST(Windows, CountFormulaAndContiguity) {
  Rng rng(4);
  Scene s;
  for (int p = 0; p < 2; ++p) s.persons.push_back({random_tensor({9, 3, 3}, rng), 25.0});
  const auto w = make_windows(s, 5, 2);
  ASSERT_EQ(w.size(), 3u);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(w[i].history.persons[1].frames, s.slice(i, 5).persons[1].frames);
    EXPECT_EQ(w[i].future.persons[1].frames, s.slice(i + 5, 2).persons[1].frames);
  }
  for (std::size_t stride : {1, 2, 3, 5}) EXPECT_EQ(make_windows(s, 3, 2, stride).size(), (9 - 3 - 2) / stride + 1);
}

SyntheticConfig clean_config() {
  SyntheticConfig c;
  c.n_sequences = 2;
  c.frames = 40;
  c.noise = 0.0;
  c.angle = 0.0;
  c.offset = {250.0, 900.0, 0.0};
  c.lag = 4;
  return c;
}

TEST(Synth, FollowerIsDelayedLeaderPlusOffset) {
  const SyntheticConfig c = clean_config();
  for (const auto& seq : synth_coupled(c)) {
    const Tensor& l = seq.scene.persons[0].frames;
    const Tensor& f = seq.scene.persons[1].frames;
    for (std::size_t t = c.lag; t < c.frames; ++t)
      for (std::size_t j = 0; j < c.joints; ++j)
        for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(f.at3(t, j, a), l.at3(t - c.lag, j, a) + c.offset[a], 1e-9);
  }
}

TEST(Synth, DeterministicForSeed) {
  SyntheticConfig c;
  c.seed = 17;
  const auto a = synth_coupled(c), b = synth_coupled(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t s = 0; s < a.size(); ++s) {
    EXPECT_EQ(a[s].label, b[s].label);
    for (std::size_t p = 0; p < 2; ++p) EXPECT_EQ(a[s].scene.persons[p].frames, b[s].scene.persons[p].frames);
  }
  c.seed = 18;
  EXPECT_NE(synth_coupled(c)[0].scene.persons[0].frames, a[0].scene.persons[0].frames);
}

TEST(Synth, CoordinatesWithinBound) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticConfig c;
    c.seed = seed;
    c.persons = 3;
    const double bound = coordinate_bound(c);
    for (const auto& s : synth_coupled(c))
      for (const auto& p : s.scene.persons) EXPECT_LE(max_abs(p.frames), bound);
  }
}

// Least-squares predictor of the follower's frame t from the leader's frame t - lag.
double lag_predictor_residual(const Scene& s, std::size_t lag, bool zero_leader) {
  const Tensor& l = s.persons[0].frames;
  const Tensor& f = s.persons[1].frames;
  const std::size_t n = s.frame_count() - lag;
  double total = 0;
  for (std::size_t j = 0; j < l.dim(1); ++j)
    for (std::size_t a = 0; a < 3; ++a) {
      double mx = 0, my = 0;
      for (std::size_t t = 0; t < n; ++t) {
        mx += (zero_leader ? 0.0 : l.at3(t, j, a)) / n;
        my += f.at3(t + lag, j, a) / n;
      }
      double sxx = 0, sxy = 0, syy = 0;
      for (std::size_t t = 0; t < n; ++t) {
        const double x = (zero_leader ? 0.0 : l.at3(t, j, a)) - mx, y = f.at3(t + lag, j, a) - my;
        sxx += x * x, sxy += x * y, syy += y * y;
      }
      total += sxx > 0 ? syy - sxy * sxy / sxx : syy;
    }
  return total;
}

TEST(Synth, LeaderHistoryInformsFollower) {
  SyntheticConfig c;
  c.angle = 0.0;
  for (const auto& s : synth_coupled(c))
    EXPECT_LT(lag_predictor_residual(s.scene, c.lag, false), lag_predictor_residual(s.scene, c.lag, true));
}

TEST(Synth, InvalidConfigRejected) {
  SyntheticConfig c;
  c.lag = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SyntheticConfig{};
  c.noise = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

std::vector<MotionSequence> labelled(std::size_t per_label, std::size_t labels) {
  SyntheticConfig c;
  c.n_sequences = per_label * labels;
  c.labels = labels;
  c.frames = 4;
  return synth_coupled(c);
}

std::set<std::string> labels_of(const std::vector<MotionSequence>& v) {
  std::set<std::string> s;
  for (const auto& m : v) s.insert(m.label);
  return s;
}

std::set<std::string> names_of(const std::vector<MotionSequence>& v) {
  std::set<std::string> s;
  for (const auto& m : v) s.insert(m.name);
  return s;
}

TEST(Split, UnseenLabelsDisjoint) {
  SplitOptions o;
  o.mode = SplitMode::unseen;
  o.test_fraction = 0.34;
  const DataSplit d = split(labelled(3, 3), o);
  ASSERT_FALSE(d.test.empty());
  ASSERT_FALSE(d.train.empty());
  for (const auto& l : labels_of(d.test)) EXPECT_EQ(labels_of(d.train).count(l), 0u) << l;
  o.test_labels = {"bogus"};
  EXPECT_THROW(split(labelled(2, 2), o), ConfigError);
}

TEST(Split, CommonSharesLabelsNotSequences) {
  SplitOptions o;
  const DataSplit d = split(labelled(4, 3), o);
  EXPECT_EQ(labels_of(d.train), labels_of(d.test));
  const auto a = names_of(d.train), b = names_of(d.test);
  for (const auto& n : b) EXPECT_EQ(a.count(n), 0u);
  EXPECT_EQ(a.size() + b.size(), 12u);
}

TEST(Split, DeterministicUnderSeed) {
  SplitOptions o;
  o.seed = 5;
  const auto seqs = labelled(4, 2);
  EXPECT_EQ(names_of(split(seqs, o).test), names_of(split(seqs, o).test));
}

TEST(Split, UnseenNeedsLabels) {
  auto seqs = labelled(2, 2);
  seqs[1].label.clear();
  SplitOptions o;
  o.mode = SplitMode::unseen;
  EXPECT_THROW(split(seqs, o), ConfigError);
  EXPECT_THROW(parse_split_mode("random"), ConfigError);
}

}  // namespace
}  // namespace pgformer
