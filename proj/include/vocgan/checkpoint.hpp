#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vocgan/params.hpp"

namespace vocgan {

// Parameter container file, format version 1:
//   magic "VOCG" | u32 version | u32 count
//   per parameter: u16 name_len | name bytes (UTF-8) | u8 rank |
//                  u32 extent per axis | raw little-endian f32 values
// All integers little-endian. Values are stored as f32 regardless of the
// in-memory scalar type; round-trips of f32 models are lossless.
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {

inline void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f32(std::ostream& os, const float* data, size_t n) {
  // serialize explicitly little-endian regardless of host order
  std::vector<unsigned char> buf(n * 4);
  for (size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &data[i], 4);
    for (int j = 0; j < 4; ++j) buf[i * 4 + j] = static_cast<unsigned char>((bits >> (8 * j)) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline void get_f32(std::istream& is, float* data, size_t n) {
  std::vector<unsigned char> buf(n * 4);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  for (size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int j = 0; j < 4; ++j) bits |= static_cast<std::uint32_t>(buf[i * 4 + j]) << (8 * j);
    std::memcpy(&data[i], &bits, 4);
  }
}

}  // namespace ckpt_detail

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

inline void write_checkpoint_entries(const std::string& path,
                                     const std::vector<CheckpointEntry>& entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(strcat_("cannot open checkpoint for writing: ", path));
  os.write("VOCG", 4);
  ckpt_detail::put_u32(os, kCheckpointVersion);
  ckpt_detail::put_u32(os, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.name.size() > 0xffff)
      throw DataError(strcat_("checkpoint: parameter name too long: ", e.name));
    ckpt_detail::put_u16(os, static_cast<std::uint16_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    os.put(static_cast<char>(e.shape.size()));
    for (auto ext : e.shape) ckpt_detail::put_u32(os, static_cast<std::uint32_t>(ext));
    ckpt_detail::put_f32(os, e.values.data(), e.values.size());
  }
  if (!os) throw DataError(strcat_("checkpoint write failed: ", path));
}

inline std::vector<CheckpointEntry> read_checkpoint_entries(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(strcat_("cannot open checkpoint: ", path));
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "VOCG", 4) != 0)
    throw DataError(strcat_("not a VOCG checkpoint: ", path));
  const std::uint32_t version = ckpt_detail::get_u32(is);
  if (version != kCheckpointVersion)
    throw DataError(strcat_("checkpoint version mismatch: file has ", version, ", reader expects ",
                            kCheckpointVersion, " (", path, ")"));
  const std::uint32_t count = ckpt_detail::get_u32(is);
  std::vector<CheckpointEntry> entries(count);
  for (auto& e : entries) {
    const std::uint16_t name_len = ckpt_detail::get_u16(is);
    e.name.resize(name_len);
    is.read(e.name.data(), name_len);
    const int rank = is.get();
    if (rank < 0) throw DataError(strcat_("truncated checkpoint: ", path));
    e.shape.resize(static_cast<size_t>(rank));
    std::int64_t numel = 1;
    for (auto& ext : e.shape) {
      ext = ckpt_detail::get_u32(is);
      numel *= ext;
    }
    e.values.resize(static_cast<size_t>(numel));
    ckpt_detail::get_f32(is, e.values.data(), e.values.size());
    if (!is) throw DataError(strcat_("truncated checkpoint: ", path));
  }
  return entries;
}

template <typename T>
void save_checkpoint(const std::string& path, const std::vector<NamedTensor<T>>& trainables) {
  std::vector<CheckpointEntry> entries;
  entries.reserve(trainables.size());
  for (const auto& nt : trainables) {
    CheckpointEntry e;
    e.name = nt.name;
    e.shape = nt.tensor->shape();
    e.values.resize(static_cast<size_t>(nt.tensor->numel()));
    const T* src = nt.tensor->data();
    for (size_t i = 0; i < e.values.size(); ++i) e.values[i] = static_cast<float>(src[i]);
    entries.push_back(std::move(e));
  }
  write_checkpoint_entries(path, entries);
}

template <typename T>
void load_checkpoint(const std::string& path, const std::vector<NamedTensor<T>>& trainables) {
  auto entries = read_checkpoint_entries(path);
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) {
    if (!by_name.emplace(e.name, &e).second)
      throw DataError(strcat_("checkpoint has duplicate parameter ", e.name));
  }
  for (const auto& nt : trainables) {
    auto it = by_name.find(nt.name);
    if (it == by_name.end())
      throw DataError(strcat_("checkpoint ", path, " is missing parameter ", nt.name));
    const CheckpointEntry& e = *it->second;
    if (e.shape != nt.tensor->shape())
      throw DataError(strcat_("checkpoint shape mismatch for ", nt.name, ": file ",
                              shape_str(e.shape), " vs model ", shape_str(nt.tensor->shape())));
    T* dst = nt.tensor->data();
    for (size_t i = 0; i < e.values.size(); ++i) dst[i] = static_cast<T>(e.values[i]);
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw DataError(strcat_("checkpoint ", path, " has ", by_name.size(),
                            " parameters unknown to the model, first: ",
                            by_name.begin()->first));
}

}  // namespace vocgan
