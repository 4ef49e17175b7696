// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pgformer/autodiff.hpp"

namespace pgformer {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Flat parameter container: path -> tensor, plus a free-form metadata record.
///
/// Layout (all integers little-endian):
///   "PGFCKPT\n"  u32 version  u64 metadata_len  metadata bytes  u32 count
///   count x { u32 name_len  name  u32 rank  rank x u64 dim  f64 payload... }
struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  std::string metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

Checkpoint snapshot(const ParameterStore& store, std::string metadata = {});
/// Copies values into a store; every name and shape must match exactly.
void restore(ParameterStore& store, const Checkpoint& ckpt);

}  // namespace pgformer
