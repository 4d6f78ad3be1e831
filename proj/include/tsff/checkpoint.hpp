#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tsff/data_io.hpp"
#include "tsff/nn/layers.hpp"

namespace tsff {

// Named f32 tensors plus the resolved run config (JSON text).
//   "TSFC" u16 version u16 reserved u32 config_len config_bytes u32 count
//   then per tensor: u16 name_len name u32 dims[4] f32 data
struct Checkpoint {
  std::string config_json;
  std::map<std::string, Tensor<float>> tensors;
};

inline constexpr std::array<char, 4> kCheckpointMagic = {'T', 'S', 'F', 'C'};

inline std::vector<unsigned char> encode_checkpoint(const Checkpoint& ck) {
  archive::detail::Writer w;
  w.bytes(kCheckpointMagic.data(), 4);
  w.le(archive::kVersion);
  w.le(std::uint16_t{0});
  archive::detail::check_u32(ck.config_json.size(), "config");
  w.le(static_cast<std::uint32_t>(ck.config_json.size()));
  w.bytes(ck.config_json.data(), ck.config_json.size());
  w.le(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    w.str(name);
    for (std::size_t d : t.dims()) {
      archive::detail::check_u32(d, "tensor dimension");
      w.le(static_cast<std::uint32_t>(d));
    }
    w.f32_block(t.span());
  }
  return std::move(w.buffer());
}

inline Checkpoint decode_checkpoint(std::vector<unsigned char> bytes) {
  archive::detail::Reader r(std::move(bytes));
  if (r.size() < 4 || r.magic() != kCheckpointMagic) throw FormatError("checkpoint: bad magic");
  if (const auto v = r.le<std::uint16_t>(); v != archive::kVersion)
    throw UnsupportedVersionError("checkpoint: unsupported version " + std::to_string(v));
  r.le<std::uint16_t>();
  Checkpoint ck;
  try {
    const auto len = r.le<std::uint32_t>();
    r.need(len);
    ck.config_json.assign(reinterpret_cast<const char*>(r.data() + r.pos()), len);
    r.skip(len);
    const auto count = r.le<std::uint32_t>();
    for (std::uint32_t k = 0; k < count; ++k) {
      std::string name = r.str();
      std::array<std::size_t, 4> d{};
      for (auto& x : d) x = r.le<std::uint32_t>();
      const std::size_t n = d[0] * d[1] * d[2] * d[3];
      r.need(n * sizeof(float));
      Tensor<float> t(d[0], d[1], d[2], d[3]);
      t.vec() = r.f32_block(r.pos(), n);
      r.skip(n * sizeof(float));
      ck.tensors.emplace(std::move(name), std::move(t));
    }
  } catch (const FormatError& e) {
    throw CorruptionError(std::string("checkpoint: truncated (") + e.what() + ")");
  }
  if (r.pos() != r.size()) throw FormatError("checkpoint: trailing bytes");
  return ck;
}

inline void write_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  archive::detail::dump(path, encode_checkpoint(ck));
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(archive::detail::slurp(path));
}

// Copies every param (learnable or not) into / out of a checkpoint by name.
template <typename T>
void store_params(Checkpoint& ck, const std::vector<nn::Param<T>*>& params) {
  for (const auto* p : params) ck.tensors[p->name] = p->value.template cast<float>();
}

template <typename T>
void load_params(const Checkpoint& ck, const std::vector<nn::Param<T>*>& params) {
  for (auto* p : params) {
    const auto it = ck.tensors.find(p->name);
    if (it == ck.tensors.end()) throw FormatError("checkpoint: missing tensor " + p->name);
    if (it->second.dims() != p->value.dims())
      throw FormatError("checkpoint: tensor " + p->name + " has shape " + it->second.shape_string() + ", expected " +
                        p->value.shape_string());
    p->value = it->second.template cast<T>();
  }
}

}  // namespace tsff
