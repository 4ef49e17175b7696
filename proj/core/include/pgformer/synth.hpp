// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pgformer/config.hpp"
#include "pgformer/data.hpp"

namespace pgformer {

/// Lag-coupled pair generator. The leader oscillates around a drifting,
/// slowly turning root; every other person replays the leader `lag` frames
/// late, turned about the vertical axis and shifted sideways.
struct SyntheticConfig {
  std::size_t n_sequences = 8;
  std::size_t frames = 80;
  std::size_t joints = 9;
  std::size_t persons = 2;
  double fps = 25.0;
  std::size_t lag = 5;                     ///< coupling delay tau, frames
  double angle = 0.5;                      ///< coupling yaw, radians
  std::array<double, 3> offset{0.0, 1000.0, 0.0};  ///< mm
  double amplitude = 80.0;                 ///< per-axis oscillation envelope, mm
  double min_frequency = 1.5;              ///< Hz
  double max_frequency = 3.5;              ///< Hz
  std::size_t components = 2;              ///< sinusoids per joint axis
  double drift_speed = 200.0;              ///< mm/s
  double turn_rate = 0.3;                  ///< rad/s
  double noise = 2.0;                      ///< follower noise sigma, mm
  std::size_t labels = 3;                  ///< action labels assigned round-robin
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_text() const;
  void read(ConfigReader& reader);
};

/// Rest pose of Skeleton::generic(J) in millimetres, [J x 3].
Tensor synthetic_rest_pose(std::size_t joints);

std::vector<MotionSequence> synth_coupled(const SyntheticConfig& config);
MotionFile synth_motion_file(const SyntheticConfig& config);

/// Upper bound on |coordinate| implied by the generator's closed form.
double coordinate_bound(const SyntheticConfig& config);

}  // namespace pgformer
