// Copyright (c) 2026, The tvgan Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Portable tensor archives.
//
// Layout, all integers and floats little-endian:
//
//   magic        8 bytes   "TVGANCKP" (model checkpoint) or "TVGANSTA" (training state)
//   version      u32       1
//   fingerprint  u64       GanSpec::fingerprint()
//   count        u32       number of tensors
//   count times:
//     name_len   u32
//     name       name_len bytes, UTF-8, no terminator
//     rank       u32
//     dims       rank x u32
//     data       prod(dims) x f32 (checkpoint) or f64 (training state)
//
// Checkpoints store 32-bit values. Training-state archives store 64-bit
// values so a resumed run continues with bit-identical arithmetic.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "tvgan/networks.hpp"

namespace tvgan {

inline constexpr std::string_view kCheckpointMagic = "TVGANCKP";
inline constexpr std::string_view kStateMagic = "TVGANSTA";
inline constexpr std::uint32_t kArchiveVersion = 1;

class FingerprintMismatch : public DataError {
 public:
  FingerprintMismatch(std::uint64_t stored, std::uint64_t expected)
      : DataError("architecture fingerprint mismatch: file has " + hex64(stored) +
                  ", requested architecture is " + hex64(expected)),
        stored_(stored),
        expected_(expected) {}

  std::uint64_t stored() const { return stored_; }
  std::uint64_t expected() const { return expected_; }

 private:
  std::uint64_t stored_, expected_;
};

enum class StorageType { f32, f64 };

struct ArchiveEntry {
  std::string name;
  Array<double> value;
};

struct Archive {
  std::uint64_t fingerprint = 0;
  std::vector<ArchiveEntry> entries;

  const ArchiveEntry* find(std::string_view name) const {
    for (const auto& e : entries) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  const Array<double>& at(std::string_view name) const {
    const auto* e = find(name);
    if (!e) throw DataError("archive has no tensor named '" + std::string(name) + "'");
    return e->value;
  }

  template <typename T>
  void add(std::string name, const Array<T>& value) {
    entries.push_back({std::move(name), value.template cast<double>()});
  }
};

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }

 private:
  template <typename U>
  void put(U v) {
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os_.write(buf, sizeof(U));
  }
  std::ostream& os_;
};

class LeReader {
 public:
  LeReader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }

 private:
  template <typename U>
  U get() {
    unsigned char buf[sizeof(U)];
    is_.read(reinterpret_cast<char*>(buf), sizeof(U));
    check();
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }
  void check() {
    if (!is_) throw DataError(path_ + ": truncated archive");
  }
  std::istream& is_;
  std::string path_;
};

}  // namespace detail

inline void write_archive(const std::filesystem::path& path, std::string_view magic,
                          const Archive& archive, StorageType storage) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  detail::LeWriter w(os);
  w.bytes(magic);
  w.u32(kArchiveVersion);
  w.u64(archive.fingerprint);
  w.u32(static_cast<std::uint32_t>(archive.entries.size()));
  for (const auto& e : archive.entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name);
    w.u32(static_cast<std::uint32_t>(e.value.rank()));
    for (auto d : e.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : e.value.data()) {
      if (storage == StorageType::f32) {
        w.f32(static_cast<float>(v));
      } else {
        w.f64(v);
      }
    }
  }
  os.flush();
  if (!os) throw DataError("failed writing " + path.string());
}

inline Archive read_archive(const std::filesystem::path& path, std::string_view magic,
                            StorageType storage) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  detail::LeReader r(is, path.string());
  if (r.bytes(magic.size()) != magic) {
    throw DataError(path.string() + ": not a " + std::string(magic) + " archive");
  }
  const auto version = r.u32();
  if (version != kArchiveVersion) {
    throw DataError(path.string() + ": unsupported archive version " + std::to_string(version));
  }
  Archive archive;
  archive.fingerprint = r.u64();
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.u32();
    if (name_len > 4096) throw DataError(path.string() + ": implausible tensor name length");
    ArchiveEntry e;
    e.name = r.bytes(name_len);
    const auto rank = r.u32();
    if (rank == 0 || rank > 8) throw DataError(path.string() + ": bad rank for " + e.name);
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.u32());
    std::vector<double> data(numel(shape));
    for (auto& v : data) v = storage == StorageType::f32 ? static_cast<double>(r.f32()) : r.f64();
    e.value = Array<double>(std::move(shape), std::move(data));
    archive.entries.push_back(std::move(e));
  }
  return archive;
}

template <typename T>
void append_network(Archive& archive, const NetworkParams<T>& params, std::string_view prefix = {}) {
  for (const auto& p : params.params()) archive.add(std::string(prefix) + p.name, p.tensor.value());
  for (const auto& b : params.buffers()) archive.add(std::string(prefix) + b.name, *b.array);
}

/// Copies values for every parameter and buffer of `params` from `archive`.
template <typename T>
void restore_network(const Archive& archive, NetworkParams<T>& params, std::string_view prefix = {}) {
  auto copy = [&](const std::string& name, Array<T>& dst) {
    const auto& src = archive.at(std::string(prefix) + name);
    if (src.shape() != dst.shape()) {
      throw DataError("tensor '" + name + "' has shape " + to_string(src.shape()) + ", expected " +
                      to_string(dst.shape()));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(src[i]);
  };
  for (auto& p : params.params()) copy(p.name, p.tensor.mutable_value());
  for (const auto& b : params.buffers()) copy(b.name, *b.array);
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const GanSpec& spec,
                     const Generator<T>& generator, const Discriminator<T>& discriminator) {
  Archive archive;
  archive.fingerprint = spec.fingerprint();
  append_network(archive, generator.params());
  append_network(archive, discriminator.params());
  write_archive(path, kCheckpointMagic, archive, StorageType::f32);
}

/// Reads a checkpoint and rejects it unless it was written for `spec`.
inline Archive read_checkpoint(const std::filesystem::path& path, const GanSpec& spec) {
  auto archive = read_archive(path, kCheckpointMagic, StorageType::f32);
  if (archive.fingerprint != spec.fingerprint()) {
    throw FingerprintMismatch(archive.fingerprint, spec.fingerprint());
  }
  return archive;
}

}  // namespace tvgan
