// SPDX-License-Identifier: Apache-2.0
#include "pgformer/synth.hpp"

#include <cmath>
#include <numbers>

#include "pgformer/errors.hpp"
#include "pgformer/nn.hpp"

namespace pgformer {

namespace {

struct Oscillator {
  double amplitude, frequency, phase;
};

// Closed-form leader of one sequence.
struct LeaderMotion {
  Tensor rest;
  std::vector<Oscillator> osc;  // [J x 3 x components]
  std::size_t components = 0;
  double heading = 0, speed = 0, yaw0 = 0, turn = 0;

  std::array<double, 3> joint(std::size_t j, double s) const {
    std::array<double, 3> local{};
    for (std::size_t a = 0; a < 3; ++a) {
      double v = rest(j, a);
      for (std::size_t c = 0; c < components; ++c) {
        const Oscillator& o = osc[(j * 3 + a) * components + c];
        v += o.amplitude * std::sin(2.0 * std::numbers::pi * o.frequency * s + o.phase);
      }
      local[a] = v;
    }
    const double yaw = yaw0 + turn * s;
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    return {cy * local[0] - sy * local[1] + speed * s * std::cos(heading),
            sy * local[0] + cy * local[1] + speed * s * std::sin(heading), local[2]};
  }
};

}  // namespace

void SyntheticConfig::validate() const {
  if (joints < 3) throw ConfigError("synth: joints must be at least 3");
  if (frames == 0) throw ConfigError("synth: frames must be positive");
  if (persons < 2) throw ConfigError("synth: persons must be at least 2");
  if (lag < 1) throw ConfigError("synth: lag must be at least one frame");
  if (noise < 0.0) throw ConfigError("synth: noise must be non-negative");
  if (!(fps > 0.0)) throw ConfigError("synth: fps must be positive");
  if (amplitude < 0.0 || drift_speed < 0.0 || turn_rate < 0.0) throw ConfigError("synth: magnitudes must be >= 0");
  if (!(min_frequency > 0.0) || max_frequency < min_frequency) throw ConfigError("synth: bad frequency range");
  if (components == 0) throw ConfigError("synth: components must be positive");
  if (labels == 0) throw ConfigError("synth: labels must be positive");
}

std::string SyntheticConfig::to_text() const {
  ConfigWriter w;
  w.write("n_sequences", n_sequences);
  w.write("frames", frames);
  w.write("joints", joints);
  w.write("persons", persons);
  w.write("fps", fps);
  w.write("lag", lag);
  w.write("angle", angle);
  w.write("offset", std::vector<double>(offset.begin(), offset.end()));
  w.write("amplitude", amplitude);
  w.write("min_frequency", min_frequency);
  w.write("max_frequency", max_frequency);
  w.write("components", components);
  w.write("drift_speed", drift_speed);
  w.write("turn_rate", turn_rate);
  w.write("noise", noise);
  w.write("labels", labels);
  w.write("seed", std::vector<std::uint64_t>{seed});
  return w.text();
}

void SyntheticConfig::read(ConfigReader& r) {
  r.read("n_sequences", n_sequences);
  r.read("frames", frames);
  r.read("joints", joints);
  r.read("persons", persons);
  r.read("fps", fps);
  r.read("lag", lag);
  r.read("angle", angle);
  std::vector<double> off(offset.begin(), offset.end());
  r.read("offset", off);
  if (off.size() != 3) throw ConfigError(r.source() + ": offset needs three values");
  offset = {off[0], off[1], off[2]};
  r.read("amplitude", amplitude);
  r.read("min_frequency", min_frequency);
  r.read("max_frequency", max_frequency);
  r.read("components", components);
  r.read("drift_speed", drift_speed);
  r.read("turn_rate", turn_rate);
  r.read("noise", noise);
  r.read("labels", labels);
  std::vector<std::uint64_t> s{seed};
  r.read("seed", s);
  if (s.size() != 1) throw ConfigError(r.source() + ": seed takes one value");
  seed = s[0];
}

Tensor synthetic_rest_pose(std::size_t joints) {
  const Skeleton sk = Skeleton::generic(joints);
  Tensor rest({joints, 3});
  const double base[3][3] = {{-100, 0, 900}, {100, 0, 900}, {0, 0, 1350}};
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t a = 0; a < 3; ++a) rest(j, a) = base[j][a];
  // Chains: left leg, right leg, left arm, right arm.
  const double dir[4][3] = {{0, 0, -220}, {0, 0, -220}, {-200, 0, -60}, {200, 0, -60}};
  for (std::size_t j = 3; j < joints; ++j) {
    const std::size_t parent = sk.edges[j - 1].first;
    const std::size_t chain = (j - 3) % 4;
    for (std::size_t a = 0; a < 3; ++a) rest(j, a) = rest(parent, a) + dir[chain][a];
  }
  return rest;
}

std::vector<MotionSequence> synth_coupled(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Tensor rest = synthetic_rest_pose(cfg.joints);
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<MotionSequence> out;
  for (std::size_t i = 0; i < cfg.n_sequences; ++i) {
    LeaderMotion m;
    m.rest = rest;
    m.components = cfg.components;
    m.heading = two_pi * unit(rng);
    m.speed = cfg.drift_speed * unit(rng);
    m.yaw0 = two_pi * unit(rng);
    m.turn = cfg.turn_rate * (2.0 * unit(rng) - 1.0);
    for (std::size_t k = 0; k < cfg.joints * 3 * cfg.components; ++k) {
      m.osc.push_back({cfg.amplitude / static_cast<double>(cfg.components) * (0.5 + 0.5 * unit(rng)),
                       cfg.min_frequency + (cfg.max_frequency - cfg.min_frequency) * unit(rng), two_pi * unit(rng)});
    }

    MotionSequence seq;
    seq.name = "synth" + std::to_string(i);
    seq.label = "a" + std::to_string(i % cfg.labels);
    for (std::size_t p = 0; p < cfg.persons; ++p) {
      Tensor f({cfg.frames, cfg.joints, 3});
      const double angle = cfg.angle * static_cast<double>(p);
      const double ca = std::cos(angle), sa = std::sin(angle);
      const double shift = static_cast<double>(p);
      for (std::size_t t = 0; t < cfg.frames; ++t) {
        // Frame index relative to the leader, so delayed frames reuse the
        // leader's exact arithmetic.
        const double s = (static_cast<double>(t) - static_cast<double>(p * cfg.lag)) / cfg.fps;
        for (std::size_t j = 0; j < cfg.joints; ++j) {
          const auto x = m.joint(j, s);
          if (p == 0) {
            for (std::size_t a = 0; a < 3; ++a) f.at3(t, j, a) = x[a];
            continue;
          }
          const double y[3] = {ca * x[0] - sa * x[1], sa * x[0] + ca * x[1], x[2]};
          for (std::size_t a = 0; a < 3; ++a) {
            double v = y[a] + shift * cfg.offset[a];
            if (cfg.noise > 0.0) v += cfg.noise * gauss(rng);
            f.at3(t, j, a) = v;
          }
        }
      }
      seq.scene.persons.push_back({std::move(f), cfg.fps});
    }
    out.push_back(std::move(seq));
  }
  return out;
}

MotionFile synth_motion_file(const SyntheticConfig& config) {
  MotionFile f;
  f.fps = config.fps;
  f.skeleton = Skeleton::generic(config.joints);
  f.sequences = synth_coupled(config);
  return f;
}

double coordinate_bound(const SyntheticConfig& cfg) {
  const Tensor rest = synthetic_rest_pose(cfg.joints);
  double rest_norm = 0.0;
  for (std::size_t j = 0; j < cfg.joints; ++j)
    rest_norm = std::max(rest_norm, std::hypot(rest(j, 0), rest(j, 1), rest(j, 2)));
  const double osc = std::sqrt(3.0) * cfg.amplitude;
  const double span = static_cast<double>(cfg.frames + cfg.persons * cfg.lag) / cfg.fps;
  const double drift = cfg.drift_speed * span;
  const double shift = static_cast<double>(cfg.persons - 1) *
                       std::hypot(cfg.offset[0], cfg.offset[1], cfg.offset[2]);
  return rest_norm + osc + drift + shift + 6.0 * cfg.noise;
}

}  // namespace pgformer
