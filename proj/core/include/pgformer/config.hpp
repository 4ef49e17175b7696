// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace pgformer {

/// Flat `key = value` text with `#` comments.
///
/// Readers consume keys as they go; finish() rejects whatever is left, so a
/// misspelt key is an error rather than a silently ignored setting.
class ConfigReader {
 public:
  static ConfigReader parse(const std::string& text, const std::string& source = "config");
  static ConfigReader load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void read(const std::string& key, std::string& out);
  void read(const std::string& key, double& out);
  void read(const std::string& key, bool& out);
  void read(const std::string& key, std::size_t& out);
  void read(const std::string& key, std::vector<double>& out);
  void read(const std::string& key, std::vector<std::uint64_t>& out);
  void read(const std::string& key, std::vector<std::string>& out);

  /// Throws ConfigError naming every key nobody consumed.
  void finish() const;

  const std::string& source() const noexcept { return source_; }

 private:
  const std::string* take(const std::string& key);

  std::string source_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

/// Accumulates `key = value` lines in insertion order.
class ConfigWriter {
 public:
  void write(const std::string& key, const std::string& value);
  void write(const std::string& key, double value);
  void write(const std::string& key, bool value);
  void write(const std::string& key, std::size_t value);
  void write(const std::string& key, const std::vector<double>& value);
  void write(const std::string& key, const std::vector<std::uint64_t>& value);
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::string format_double(double v);

}  // namespace pgformer
