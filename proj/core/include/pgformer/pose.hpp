// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pgformer/tensor.hpp"

namespace pgformer {

/// Joint topology plus the joints that define the body frame.
///
/// The first two root joints are read as the left/right hips; their horizontal
/// offset gives the facing axis used for canonicalisation.
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> root_joints;
  std::size_t up_axis = 2;

  std::size_t joint_count() const noexcept { return joint_names.size(); }
  void validate() const;

  /// A simple J-joint skeleton: two hips, a back joint, then limb chains.
  static Skeleton generic(std::size_t joints);

  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

/// One person's motion: frames [T x J x 3] in millimetres.
struct PoseSequence {
  Tensor frames;
  double fps = 25.0;

  std::size_t frame_count() const { return frames.dim(0); }
  std::size_t joint_count() const { return frames.dim(1); }
  void validate() const;
};

/// Time-aligned persons; index 0 is the leader.
struct Scene {
  std::vector<PoseSequence> persons;

  std::size_t person_count() const noexcept { return persons.size(); }
  std::size_t frame_count() const { return persons.at(0).frame_count(); }
  std::size_t joint_count() const { return persons.at(0).joint_count(); }
  double fps() const { return persons.at(0).fps; }

  void validate() const;
  Scene slice(std::size_t begin, std::size_t count) const;
  /// Frames of `b` appended after those of `a`.
  static Scene concat_time(const Scene& a, const Scene& b);
};

/// Orthonormal DCT-II basis: row k holds the k-th cosine over n = 0..T-1.
Tensor dct_matrix(std::size_t frames);
/// Transforms every channel along the leading (time) axis: [T x ...] -> [T x ...].
Tensor dct_time(const Tensor& sequence);
Tensor idct_time(const Tensor& coefficients);

/// [J x 3] -> [3J], joint-major.
Tensor flatten_pose(const Tensor& frame);
/// [3J] -> [J x 3]; throws FormatError when the length is not a multiple of 3.
Tensor unflatten_pose(const Tensor& flat);

/// y = R x + t.
struct RigidTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> translation{0, 0, 0};

  std::array<double, 3> apply(const std::array<double, 3>& p) const noexcept;
  /// Applies to every trailing xyz triple of a [... x 3] tensor.
  Tensor apply(const Tensor& points) const;
  Scene apply(const Scene& scene) const;
  RigidTransform inverse() const noexcept;
};

/// Translation moving the anchor's root centroid at frame 0 to the origin,
/// followed by the yaw turning its hip axis onto the first horizontal axis.
RigidTransform canonical_transform(const Scene& scene, std::size_t anchor, const Skeleton& skeleton);
Scene leader_normalize(const Scene& scene, std::size_t anchor, const Skeleton& skeleton);

}  // namespace pgformer
