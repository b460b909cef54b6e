// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/checkpoint.hpp"

#include <algorithm>

#include "neuromoe/binary_io.hpp"
#include "neuromoe/error.hpp"

namespace neuromoe {

namespace {
constexpr char kMagic[4] = {'N', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::array<std::uint8_t, 32> config_fingerprint(const ModelConfig& cfg) {
  return sha256(cfg.canonical_text());
}

template <typename T>
Checkpoint snapshot(const NeuroMoE<T>& model) {
  Checkpoint c;
  c.fingerprint = config_fingerprint(model.config());
  for (const auto* p : model.parameters().all())
    c.params.emplace_back(p->name, p->value.template cast<double>());
  return c;
}

template <typename T>
void restore(NeuroMoE<T>& model, const Checkpoint& ckpt) {
  if (ckpt.fingerprint != config_fingerprint(model.config()))
    throw ConfigMismatchError("checkpoint was written for a different model configuration "
                              "(fingerprint " + to_hex(ckpt.fingerprint) + ", expected " +
                              model.config().fingerprint_hex() + ")");
  auto params = model.parameters().all();
  if (params.size() != ckpt.params.size())
    throw ConfigMismatchError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                              " parameters, model has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, value] = ckpt.params[i];
    if (name != params[i]->name || value.shape() != params[i]->value.shape())
      throw ConfigMismatchError("checkpoint parameter " + name + " " + shape_str(value.shape()) +
                                " does not match model parameter " + params[i]->name + " " +
                                shape_str(params[i]->value.shape()));
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i]->value = ckpt.params[i].second.template cast<T>();
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.str(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.bytes(ckpt.fingerprint);
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, value] : ckpt.params) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.str(name);
    w.u8(static_cast<std::uint8_t>(value.rank()));
    for (auto d : value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : value.values()) w.f64(v);
  }
  w.u32(crc32(w.buffer()));
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.str(4) != std::string_view(kMagic, 4))
    throw FormatError("bad magic, not an NMCK checkpoint", 0);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  Checkpoint c;
  auto fp = r.bytes(32);
  std::copy(fp.begin(), fp.end(), c.fingerprint.begin());
  const std::uint32_t count = r.u32();
  for (std::uint32_t n = 0; n < count; ++n) {
    std::string name = r.str(r.u16());
    const std::size_t rank_at = r.offset();
    const std::uint8_t rank = r.u8();
    if (rank == 0) throw FormatError("parameter " + name + " has rank 0", rank_at);
    Shape shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
      const std::size_t at = r.offset();
      d = r.u32();
      if (d == 0) throw FormatError("parameter " + name + " has a zero dimension", at);
      total *= d;
      if (total > r.remaining() / 8)
        throw FormatError("parameter " + name + " payload exceeds file size", at);
    }
    Tensor<double> t(shape);
    for (auto& v : t.values()) v = r.f64();
    if (!c.params.empty() && !(c.params.back().first < name))
      throw FormatError("parameter names are not strictly sorted at " + name, rank_at);
    c.params.emplace_back(std::move(name), std::move(t));
  }
  const std::size_t trailer_at = r.offset();
  const std::uint32_t expect = crc32(bytes.first(trailer_at));
  if (r.u32() != expect) throw ChecksumError("checkpoint CRC32 mismatch", trailer_at);
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.offset());
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

template Checkpoint snapshot<float>(const NeuroMoE<float>&);
template Checkpoint snapshot<double>(const NeuroMoE<double>&);
template void restore<float>(NeuroMoE<float>&, const Checkpoint&);
template void restore<double>(NeuroMoE<double>&, const Checkpoint&);

}  // namespace neuromoe
