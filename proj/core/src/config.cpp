// SPDX-License-Identifier: Apache-2.0
#include "pgformer/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "binary_io.hpp"
#include "pgformer/errors.hpp"

namespace pgformer {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key, const std::string& source) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(source + ": key '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ConfigReader ConfigReader::parse(const std::string& text, const std::string& source) {
  ConfigReader r;
  r.source_ = source;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!r.values_.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return r;
}

ConfigReader ConfigReader::load(const std::string& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const FormatError&) {
    throw ConfigError("cannot read config file " + path);
  }
  return parse(text, path);
}

const std::string* ConfigReader::take(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  consumed_.insert(key);
  return &it->second;
}

void ConfigReader::read(const std::string& key, std::string& out) {
  if (auto v = take(key)) out = *v;
}

void ConfigReader::read(const std::string& key, double& out) {
  if (auto v = take(key)) out = parse_number<double>(*v, key, source_);
}

void ConfigReader::read(const std::string& key, bool& out) {
  if (auto v = take(key)) {
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") out = true;
    else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") out = false;
    else throw ConfigError(source_ + ": key '" + key + "' expects true/false, got '" + *v + "'");
  }
}

void ConfigReader::read(const std::string& key, std::size_t& out) {
  if (auto v = take(key)) out = parse_number<std::size_t>(*v, key, source_);
}

void ConfigReader::read(const std::string& key, std::vector<double>& out) {
  if (auto v = take(key)) {
    out.clear();
    for (const auto& item : split_list(*v)) out.push_back(parse_number<double>(item, key, source_));
  }
}

void ConfigReader::read(const std::string& key, std::vector<std::uint64_t>& out) {
  if (auto v = take(key)) {
    out.clear();
    for (const auto& item : split_list(*v)) out.push_back(parse_number<std::uint64_t>(item, key, source_));
  }
}

void ConfigReader::read(const std::string& key, std::vector<std::string>& out) {
  if (auto v = take(key)) out = split_list(*v);
}

void ConfigReader::finish() const {
  std::string unknown;
  for (const auto& [k, v] : values_) {
    if (consumed_.count(k)) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += k;
  }
  if (!unknown.empty()) throw ConfigError(source_ + ": unknown key(s): " + unknown);
}

void ConfigWriter::write(const std::string& key, const std::string& value) { text_ += key + " = " + value + "\n"; }
void ConfigWriter::write(const std::string& key, double value) { write(key, format_double(value)); }
void ConfigWriter::write(const std::string& key, bool value) { write(key, std::string(value ? "true" : "false")); }
void ConfigWriter::write(const std::string& key, std::size_t value) { write(key, std::to_string(value)); }

void ConfigWriter::write(const std::string& key, const std::vector<double>& value) {
  std::string s;
  for (std::size_t i = 0; i < value.size(); ++i) s += (i ? "," : "") + format_double(value[i]);
  write(key, s);
}

void ConfigWriter::write(const std::string& key, const std::vector<std::uint64_t>& value) {
  std::string s;
  for (std::size_t i = 0; i < value.size(); ++i) s += (i ? "," : "") + std::to_string(value[i]);
  write(key, s);
}

}  // namespace pgformer
