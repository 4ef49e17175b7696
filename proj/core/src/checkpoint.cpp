// SPDX-License-Identifier: Apache-2.0
#include "pgformer/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "pgformer/errors.hpp"

namespace pgformer {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path);
}

}  // namespace detail

namespace {
constexpr std::string_view kMagic = "PGFCKPT\n";
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic);
  detail::put_le<std::uint32_t>(out, ckpt.format_version);
  detail::put_le<std::uint64_t>(out, ckpt.metadata.size());
  out += ckpt.metadata;
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) detail::put_le<std::uint64_t>(out, d);
    for (double v : t.values()) detail::put_f64(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  detail::ByteReader in(bytes, "checkpoint");
  if (in.get_bytes(kMagic.size()) != kMagic) throw FormatError("checkpoint: bad magic");
  Checkpoint ckpt;
  ckpt.format_version = in.get_le<std::uint32_t>();
  if (ckpt.format_version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(ckpt.format_version));
  }
  const auto meta_len = in.get_le<std::uint64_t>();
  ckpt.metadata = in.get_bytes(meta_len);
  const auto count = in.get_le<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = in.get_le<std::uint32_t>();
    std::string name = in.get_bytes(name_len);
    const auto rank = in.get_le<std::uint32_t>();
    if (rank == 0 || rank > 8) throw FormatError("checkpoint: bad rank for " + name);
    Tensor::Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(in.get_le<std::uint64_t>());
    const std::size_t n = shape_product(shape);
    in.need(n * 8);
    std::vector<double> data(n);
    for (auto& v : data) v = in.get_f64();
    ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (in.remaining() != 0) {
    throw FormatError("checkpoint: trailing bytes at offset " + std::to_string(in.offset()));
  }
  return ckpt;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::string& path) { return decode_checkpoint(detail::read_file(path)); }

Checkpoint snapshot(const ParameterStore& store, std::string metadata) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(metadata);
  for (const auto& e : store.entries()) ckpt.tensors.emplace_back(e.name, e.param->value);
  return ckpt;
}

void restore(ParameterStore& store, const Checkpoint& ckpt) {
  if (ckpt.tensors.size() != store.entries().size()) {
    throw FormatError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                      std::to_string(store.entries().size()));
  }
  for (const auto& [name, t] : ckpt.tensors) {
    if (!store.contains(name)) throw FormatError("checkpoint tensor " + name + " is not a model parameter");
    Parameter& p = store.get(name);
    if (!p.value.same_shape(t)) {
      throw FormatError("checkpoint tensor " + name + " has shape " + t.shape_string() + ", model expects " +
                        p.value.shape_string());
    }
    p.value = t;
  }
}

}  // namespace pgformer
