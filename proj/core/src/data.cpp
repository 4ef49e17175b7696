// SPDX-License-Identifier: Apache-2.0
#include "pgformer/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "pgformer/config.hpp"
#include "pgformer/errors.hpp"
#include "pgformer/nn.hpp"

namespace pgformer {

namespace {

constexpr std::string_view kMagic = "PGMOTION";

bool is_token(const std::string& s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

struct HeaderCursor {
  std::string_view text;
  std::size_t pos = 0;
  int line = 0;

  // Returns the next header line; the binary block follows the "data" line.
  std::string next() {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      throw FormatError("motion file: header truncated at byte offset " + std::to_string(pos));
    }
    std::string l(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line;
    return l;
  }

  std::vector<std::string> fields(const std::string& expected_key) {
    std::istringstream is(next());
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    if (out.empty() || out[0] != expected_key) {
      throw FormatError("motion file line " + std::to_string(line) + ": expected '" + expected_key + "'");
    }
    out.erase(out.begin());
    return out;
  }
};

std::size_t to_index(const std::string& s, int line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError("motion file line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  }
  return v;
}

}  // namespace

void MotionFile::validate() const {
  skeleton.validate();
  if (!(fps > 0.0) || !std::isfinite(fps)) throw FormatError("motion file fps must be positive");
  std::set<std::string> names;
  for (const auto& s : sequences) {
    if (!is_token(s.name)) throw FormatError("sequence names must be non-empty and contain no whitespace");
    if (!names.insert(s.name).second) throw FormatError("duplicate sequence name '" + s.name + "'");
    if (!s.label.empty() && !is_token(s.label)) throw FormatError("sequence labels must contain no whitespace");
    s.scene.validate();
    if (s.scene.joint_count() != skeleton.joint_count()) {
      throw DimensionError("sequence '" + s.name + "' has J=" + std::to_string(s.scene.joint_count()) +
                           " but the skeleton has J=" + std::to_string(skeleton.joint_count()));
    }
    if (s.scene.fps() != fps) throw FormatError("sequence '" + s.name + "' fps differs from the file fps");
  }
}

std::string encode_motion_file(const MotionFile& file) {
  file.validate();
  const Skeleton& sk = file.skeleton;
  std::string out = std::string(kMagic) + " " + std::to_string(file.format_version) + "\n";
  out += "fps " + format_double(file.fps) + "\n";
  out += "joints " + std::to_string(sk.joint_count()) + "\n";
  out += "names";
  for (const auto& n : sk.joint_names) out += " " + n;
  out += "\nedges";
  for (const auto& [a, b] : sk.edges) out += " " + std::to_string(a) + "-" + std::to_string(b);
  out += "\nroots";
  for (std::size_t r : sk.root_joints) out += " " + std::to_string(r);
  out += "\nup_axis " + std::to_string(sk.up_axis) + "\n";
  out += "sequences " + std::to_string(file.sequences.size()) + "\n";
  for (const auto& s : file.sequences) {
    out += "sequence " + s.name + " " + (s.label.empty() ? "-" : s.label) + " " +
           std::to_string(s.scene.frame_count()) + " " + std::to_string(s.scene.person_count()) + "\n";
  }
  out += "data\n";
  for (const auto& s : file.sequences) {
    const std::size_t frames = s.scene.frame_count(), joints = s.scene.joint_count();
    for (std::size_t t = 0; t < frames; ++t)
      for (const auto& p : s.scene.persons)
        for (std::size_t j = 0; j < joints; ++j)
          for (std::size_t a = 0; a < 3; ++a) detail::put_f64(out, p.frames.at3(t, j, a));
  }
  return out;
}

MotionFile decode_motion_file(const std::string& bytes) {
  HeaderCursor h{bytes};
  MotionFile f;
  {
    auto v = h.fields(std::string(kMagic));
    if (v.size() != 1) throw FormatError("motion file: malformed magic line");
    f.format_version = static_cast<std::uint32_t>(to_index(v[0], h.line));
    if (f.format_version != kMotionFormatVersion) {
      throw FormatError("motion file: unsupported format version " + v[0] + " (expected " +
                        std::to_string(kMotionFormatVersion) + ")");
    }
  }
  {
    auto v = h.fields("fps");
    if (v.size() != 1) throw FormatError("motion file line " + std::to_string(h.line) + ": fps takes one value");
    f.fps = std::stod(v[0]);
  }
  const std::size_t joints = [&] {
    auto v = h.fields("joints");
    if (v.size() != 1) throw FormatError("motion file line " + std::to_string(h.line) + ": joints takes one value");
    return to_index(v[0], h.line);
  }();
  f.skeleton.joint_names = h.fields("names");
  if (f.skeleton.joint_names.size() != joints) {
    throw FormatError("motion file: " + std::to_string(f.skeleton.joint_names.size()) + " joint names for J=" +
                      std::to_string(joints));
  }
  for (const auto& e : h.fields("edges")) {
    const auto dash = e.find('-');
    if (dash == std::string::npos) throw FormatError("motion file line " + std::to_string(h.line) + ": bad edge '" + e + "'");
    f.skeleton.edges.emplace_back(to_index(e.substr(0, dash), h.line), to_index(e.substr(dash + 1), h.line));
  }
  for (const auto& r : h.fields("roots")) f.skeleton.root_joints.push_back(to_index(r, h.line));
  {
    auto v = h.fields("up_axis");
    if (v.size() != 1) throw FormatError("motion file line " + std::to_string(h.line) + ": up_axis takes one value");
    f.skeleton.up_axis = to_index(v[0], h.line);
  }
  f.skeleton.validate();

  struct Entry {
    std::string name, label;
    std::size_t frames, persons;
  };
  std::vector<Entry> entries;
  {
    auto v = h.fields("sequences");
    if (v.size() != 1) throw FormatError("motion file line " + std::to_string(h.line) + ": sequences takes one value");
    const std::size_t count = to_index(v[0], h.line);
    for (std::size_t i = 0; i < count; ++i) {
      auto s = h.fields("sequence");
      if (s.size() != 4) throw FormatError("motion file line " + std::to_string(h.line) + ": sequence needs 4 fields");
      entries.push_back({s[0], s[1] == "-" ? std::string() : s[1], to_index(s[2], h.line), to_index(s[3], h.line)});
    }
  }
  if (!h.fields("data").empty()) throw FormatError("motion file line " + std::to_string(h.line) + ": bad data marker");

  detail::ByteReader r(std::string_view(bytes).substr(h.pos), "motion file", h.pos);
  for (const auto& e : entries) {
    MotionSequence seq{e.name, e.label, {}};
    std::vector<Tensor> persons(e.persons, Tensor({e.frames, joints, 3}));
    for (std::size_t t = 0; t < e.frames; ++t)
      for (std::size_t p = 0; p < e.persons; ++p)
        for (std::size_t j = 0; j < joints; ++j)
          for (std::size_t a = 0; a < 3; ++a) {
            const double v = r.get_f64();
            if (!std::isfinite(v)) {
              throw FormatError("motion file: non-finite coordinate in sequence '" + e.name + "' at frame " +
                                std::to_string(t) + ", person " + std::to_string(p) + ", joint " + std::to_string(j) +
                                " (byte offset " + std::to_string(r.offset() - 8) + ")");
            }
            persons[p].at3(t, j, a) = v;
          }
    for (auto& p : persons) seq.scene.persons.push_back({std::move(p), f.fps});
    f.sequences.push_back(std::move(seq));
  }
  if (r.remaining() != 0) {
    throw FormatError("motion file: " + std::to_string(r.remaining()) + " trailing bytes at byte offset " +
                      std::to_string(r.offset()));
  }
  f.validate();
  return f;
}

void save_scene_file(const std::string& path, const MotionFile& file) {
  detail::write_file(path, encode_motion_file(file));
}

MotionFile load_scene_file(const std::string& path) { return decode_motion_file(detail::read_file(path)); }

std::vector<Sample> make_windows(const Scene& scene, std::size_t history_frames, std::size_t horizon,
                                 std::size_t stride) {
  if (history_frames == 0 || horizon == 0 || stride == 0) {
    throw ConfigError("make_windows: history, horizon and stride must be positive");
  }
  std::vector<Sample> out;
  const std::size_t len = scene.frame_count();
  if (len < history_frames + horizon) return out;
  for (std::size_t start = 0; start + history_frames + horizon <= len; start += stride) {
    out.push_back({scene.slice(start, history_frames), scene.slice(start + history_frames, horizon)});
  }
  return out;
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "common") return SplitMode::common;
  if (name == "unseen") return SplitMode::unseen;
  throw ConfigError("unknown split mode '" + name + "' (expected common or unseen)");
}

DataSplit split(const std::vector<MotionSequence>& sequences, const SplitOptions& options) {
  if (!(options.test_fraction >= 0.0 && options.test_fraction <= 1.0)) {
    throw ConfigError("split: test_fraction must lie in [0, 1]");
  }
  Rng rng(options.seed);
  DataSplit out;
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < sequences.size(); ++i) by_label[sequences[i].label].push_back(i);

  if (options.mode == SplitMode::common) {
    std::vector<bool> is_test(sequences.size(), false);
    for (auto& [label, ids] : by_label) {
      std::shuffle(ids.begin(), ids.end(), rng);
      auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(ids.size())));
      if (ids.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, ids.size() - 1);
      for (std::size_t k = 0; k < n_test && k < ids.size(); ++k) is_test[ids[k]] = true;
    }
    for (std::size_t i = 0; i < sequences.size(); ++i) (is_test[i] ? out.test : out.train).push_back(sequences[i]);
    return out;
  }

  for (const auto& s : sequences) {
    if (s.label.empty()) throw ConfigError("unseen split needs an action label on every sequence ('" + s.name + "' has none)");
  }
  std::set<std::string> held;
  if (!options.test_labels.empty()) {
    for (const auto& l : options.test_labels) {
      if (!by_label.count(l)) throw ConfigError("unseen split: label '" + l + "' does not occur in the data");
      held.insert(l);
    }
  } else {
    std::vector<std::string> labels;
    for (const auto& [label, ids] : by_label) labels.push_back(label);
    std::shuffle(labels.begin(), labels.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(labels.size())));
    if (labels.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, labels.size() - 1);
    held.insert(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(std::min(n_test, labels.size())));
  }
  for (const auto& s : sequences) (held.count(s.label) ? out.test : out.train).push_back(s);
  return out;
}

}  // namespace pgformer
