// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgformer/pose.hpp"
#include "pgformer/training.hpp"

namespace pgformer {

inline constexpr std::uint32_t kMotionFormatVersion = 1;

struct MotionSequence {
  std::string name;
  std::string label;  ///< action label; empty when unknown
  Scene scene;
};

/// A skeleton, a frame rate and named multi-person sequences in millimetres.
struct MotionFile {
  std::uint32_t format_version = kMotionFormatVersion;
  double fps = 25.0;
  Skeleton skeleton;
  std::vector<MotionSequence> sequences;

  void validate() const;
};

std::string encode_motion_file(const MotionFile& file);
MotionFile decode_motion_file(const std::string& bytes);
void save_scene_file(const std::string& path, const MotionFile& file);
MotionFile load_scene_file(const std::string& path);

/// Sliding (history, future) windows; a scene shorter than T + horizon yields none.
std::vector<Sample> make_windows(const Scene& scene, std::size_t history_frames, std::size_t horizon,
                                 std::size_t stride = 1);

enum class SplitMode { common, unseen };

SplitMode parse_split_mode(const std::string& name);

struct SplitOptions {
  SplitMode mode = SplitMode::common;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
  std::vector<std::string> test_labels;  ///< unseen mode: explicit held-out labels
};

struct DataSplit {
  std::vector<MotionSequence> train;
  std::vector<MotionSequence> test;
};

/// common: every label is split by sequence; unseen: whole labels are held out.
DataSplit split(const std::vector<MotionSequence>& sequences, const SplitOptions& options);

}  // namespace pgformer
