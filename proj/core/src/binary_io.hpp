// SPDX-License-Identifier: Apache-2.0
// Little-endian primitives for the on-disk formats.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "pgformer/errors.hpp"

namespace pgformer::detail {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

/// Cursor over an in-memory byte buffer; failures name the byte offset.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string what, std::size_t base_offset = 0)
      : bytes_(bytes), what_(std::move(what)), base_(base_offset) {}

  template <typename U>
  U get_le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::size_t offset() const noexcept { return base_ + pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(what_ + ": truncated at byte offset " + std::to_string(base_ + pos_) + " (needed " +
                        std::to_string(n) + " more bytes, " + std::to_string(bytes_.size() - pos_) +
                        " available)");
    }
  }

 private:
  std::string_view bytes_;
  std::string what_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace pgformer::detail
