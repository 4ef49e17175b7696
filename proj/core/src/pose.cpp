// SPDX-License-Identifier: Apache-2.0
#include "pgformer/pose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "pgformer/errors.hpp"

namespace pgformer {

void Skeleton::validate() const {
  const std::size_t j = joint_count();
  if (j == 0) throw FormatError("skeleton has no joints");
  for (const auto& [a, b] : edges) {
    if (a >= j || b >= j) throw FormatError("skeleton edge references a joint outside [0, " + std::to_string(j) + ")");
    if (a == b) throw FormatError("skeleton edge " + std::to_string(a) + "-" + std::to_string(b) + " is a self-loop");
  }
  if (root_joints.empty()) throw FormatError("skeleton needs at least one root joint");
  std::set<std::size_t> seen;
  for (auto r : root_joints) {
    if (r >= j) throw FormatError("root joint " + std::to_string(r) + " out of range");
    if (!seen.insert(r).second) throw FormatError("root joint " + std::to_string(r) + " listed twice");
  }
  if (up_axis > 2) throw FormatError("up axis must be 0, 1 or 2");
}

Skeleton Skeleton::generic(std::size_t joints) {
  if (joints < 3) throw ConfigError("generic skeleton needs at least 3 joints");
  Skeleton s;
  s.joint_names = {"lhip", "rhip", "back"};
  s.edges = {{2, 0}, {2, 1}};
  s.root_joints = {0, 1, 2};
  // Remaining joints form four chains hanging off hips and back.
  std::array<std::size_t, 4> tips{0, 1, 2, 2};
  for (std::size_t j = 3; j < joints; ++j) {
    const std::size_t chain = (j - 3) % 4;
    s.joint_names.push_back("j" + std::to_string(j));
    s.edges.emplace_back(tips[chain], j);
    tips[chain] = j;
  }
  return s;
}

void PoseSequence::validate() const {
  if (frames.rank() != 3 || frames.dim(2) != 3) {
    throw DimensionError("pose sequence must be [T x J x 3], got " + frames.shape_string());
  }
  if (!(fps > 0.0)) throw FormatError("pose sequence fps must be positive");
  if (!frames.all_finite()) throw FormatError("pose sequence holds non-finite coordinates");
}

void Scene::validate() const {
  if (persons.size() < 2) throw FormatError("a scene needs at least two persons");
  for (const auto& p : persons) {
    p.validate();
    if (p.frames.shape() != persons[0].frames.shape() || p.fps != persons[0].fps) {
      throw DimensionError("scene persons are not time-aligned: " + p.frames.shape_string() + " vs " +
                           persons[0].frames.shape_string());
    }
  }
}

Scene Scene::slice(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > frame_count()) {
    throw DimensionError("scene slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") exceeds " + std::to_string(frame_count()) + " frames");
  }
  Scene out;
  const std::size_t stride = joint_count() * 3;
  for (const auto& p : persons) {
    Tensor f({count, p.joint_count(), 3});
    std::copy_n(p.frames.raw() + begin * stride, count * stride, f.raw());
    out.persons.push_back({std::move(f), p.fps});
  }
  return out;
}

Scene Scene::concat_time(const Scene& a, const Scene& b) {
  if (a.person_count() != b.person_count() || a.joint_count() != b.joint_count()) {
    throw DimensionError("cannot concatenate scenes with different persons or joints");
  }
  Scene out;
  for (std::size_t i = 0; i < a.person_count(); ++i) {
    const Tensor& fa = a.persons[i].frames;
    const Tensor& fb = b.persons[i].frames;
    std::vector<double> data(fa.values().begin(), fa.values().end());
    data.insert(data.end(), fb.values().begin(), fb.values().end());
    out.persons.push_back({Tensor({fa.dim(0) + fb.dim(0), fa.dim(1), 3}, std::move(data)), a.persons[i].fps});
  }
  return out;
}

Tensor dct_matrix(std::size_t frames) {
  if (frames == 0) throw DimensionError("DCT length must be positive");
  Tensor c({frames, frames});
  const double n = static_cast<double>(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t t = 0; t < frames; ++t) {
      c(k, t) = s * std::cos(std::numbers::pi * (static_cast<double>(t) + 0.5) * static_cast<double>(k) / n);
    }
  }
  return c;
}

namespace {
Tensor as_time_matrix(const Tensor& x) {
  const std::size_t t = x.dim(0);
  return x.reshaped({t, x.size() / t});
}
}  // namespace

Tensor dct_time(const Tensor& sequence) {
  Tensor out = matmul(dct_matrix(sequence.dim(0)), as_time_matrix(sequence));
  return out.reshaped(sequence.shape());
}

Tensor idct_time(const Tensor& coefficients) {
  const std::size_t t = coefficients.dim(0);
  Tensor x = as_time_matrix(coefficients);
  Tensor out({t, x.cols()});
  kernels::gemm_tn_acc(dct_matrix(t).raw(), x.raw(), out.raw(), t, t, x.cols());
  return out.reshaped(coefficients.shape());
}

Tensor flatten_pose(const Tensor& frame) {
  if (frame.rank() != 2 || frame.cols() != 3) throw DimensionError("pose frame must be [J x 3], got " + frame.shape_string());
  return frame.reshaped({frame.size()});
}

Tensor unflatten_pose(const Tensor& flat) {
  if (flat.size() % 3 != 0) {
    throw FormatError("flattened pose length " + std::to_string(flat.size()) + " is not divisible by 3");
  }
  return flat.reshaped({flat.size() / 3, 3});
}

std::array<double, 3> RigidTransform::apply(const std::array<double, 3>& p) const noexcept {
  std::array<double, 3> out{};
  for (int r = 0; r < 3; ++r) {
    out[r] = rotation[r * 3] * p[0] + rotation[r * 3 + 1] * p[1] + rotation[r * 3 + 2] * p[2] + translation[r];
  }
  return out;
}

Tensor RigidTransform::apply(const Tensor& points) const {
  if (points.cols() != 3) throw DimensionError("rigid transform needs [... x 3] points, got " + points.shape_string());
  Tensor out(points.shape());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto q = apply({points[i * 3], points[i * 3 + 1], points[i * 3 + 2]});
    std::copy(q.begin(), q.end(), out.raw() + i * 3);
  }
  return out;
}

Scene RigidTransform::apply(const Scene& scene) const {
  Scene out;
  for (const auto& p : scene.persons) out.persons.push_back({apply(p.frames), p.fps});
  return out;
}

RigidTransform RigidTransform::inverse() const noexcept {
  RigidTransform inv;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) inv.rotation[r * 3 + c] = rotation[c * 3 + r];
  for (int r = 0; r < 3; ++r) {
    inv.translation[r] = -(inv.rotation[r * 3] * translation[0] + inv.rotation[r * 3 + 1] * translation[1] +
                           inv.rotation[r * 3 + 2] * translation[2]);
  }
  return inv;
}

RigidTransform canonical_transform(const Scene& scene, std::size_t anchor, const Skeleton& skeleton) {
  if (anchor >= scene.person_count()) {
    throw ConfigError("anchor person " + std::to_string(anchor) + " out of range for " +
                      std::to_string(scene.person_count()) + " persons");
  }
  if (skeleton.root_joints.size() < 2) throw NormalizationError("canonical frame needs two hip joints");
  const Tensor& f = scene.persons[anchor].frames;
  std::array<double, 3> centroid{0, 0, 0};
  for (auto j : skeleton.root_joints)
    for (std::size_t a = 0; a < 3; ++a) centroid[a] += f.at3(0, j, a);
  for (auto& c : centroid) c /= static_cast<double>(skeleton.root_joints.size());

  const std::size_t up = skeleton.up_axis;
  const std::size_t ax = (up + 1) % 3, bx = (up + 2) % 3;
  const std::size_t h0 = skeleton.root_joints[0], h1 = skeleton.root_joints[1];
  const double ha = f.at3(0, h1, ax) - f.at3(0, h0, ax);
  const double hb = f.at3(0, h1, bx) - f.at3(0, h0, bx);
  const double len = std::hypot(ha, hb);
  if (!(len > 1e-9)) throw NormalizationError("hip axis has zero horizontal length at frame 0");
  const double c = ha / len, s = hb / len;

  RigidTransform tf;
  tf.rotation.fill(0.0);
  tf.rotation[ax * 3 + ax] = c;
  tf.rotation[ax * 3 + bx] = s;
  tf.rotation[bx * 3 + ax] = -s;
  tf.rotation[bx * 3 + bx] = c;
  tf.rotation[up * 3 + up] = 1.0;
  for (int r = 0; r < 3; ++r) {
    tf.translation[r] = -(tf.rotation[r * 3] * centroid[0] + tf.rotation[r * 3 + 1] * centroid[1] +
                          tf.rotation[r * 3 + 2] * centroid[2]);
  }
  return tf;
}

Scene leader_normalize(const Scene& scene, std::size_t anchor, const Skeleton& skeleton) {
  return canonical_transform(scene, anchor, skeleton).apply(scene);
}

}  // namespace pgformer
