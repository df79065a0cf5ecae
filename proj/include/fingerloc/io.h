// Copyright 2026 The fingerloc Authors
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

#ifndef FINGERLOC_IO_H_
#define FINGERLOC_IO_H_

#include <bit>
#include <cstring>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fingerloc/error.h"

// Artifact files: a text manifest plus one or more raw little-endian blobs.
//
//   fingerloc-manifest <format version>
//   kind <artifact kind>
//   <key> <value...>                                   (free-form metadata)
//   section <name> <dtype> <shape> <blob> <offset> <bytes> <crc32>
//
// dtype is one of f32 f64 i32 u32 u8; shape is dims joined by 'x' ("-" for
// a scalar list of length 0). Blob paths are relative to the manifest.
namespace fingerloc::io {

static_assert(std::endian::native == std::endian::little,
              "artifact blobs are written in host order, which must be little-endian");

inline constexpr int kManifestFormat = 1;

uint32_t crc32(std::span<const uint8_t> bytes);
uint32_t crc32_file(const std::filesystem::path& path);

struct Section {
  std::string name;
  std::string dtype;
  std::vector<size_t> shape;
  std::string blob;
  uint64_t offset = 0;
  uint64_t bytes = 0;
  uint32_t crc = 0;
};

class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::string kind) : kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }

  void add_section(Section s) { sections_.push_back(std::move(s)); }
  const std::vector<Section>& sections() const { return sections_; }
  const Section& section(const std::string& name) const;
  bool has_section(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Manifest load(const std::filesystem::path& path, const std::string& expected_kind);

 private:
  std::string kind_;
  std::vector<std::pair<std::string, std::string>> fields_;
  std::vector<Section> sections_;
};

size_t dtype_size(const std::string& dtype);

template <typename T>
constexpr const char* dtype_of();
template <>
constexpr const char* dtype_of<float>() { return "f32"; }
template <>
constexpr const char* dtype_of<double>() { return "f64"; }
template <>
constexpr const char* dtype_of<int32_t>() { return "i32"; }
template <>
constexpr const char* dtype_of<uint32_t>() { return "u32"; }
template <>
constexpr const char* dtype_of<uint8_t>() { return "u8"; }

// Appends sections to one blob file.
class BlobWriter {
 public:
  BlobWriter(const std::filesystem::path& blob_path, std::string blob_name);

  template <typename T>
  Section write(const std::string& name, std::vector<size_t> shape, std::span<const T> data) {
    return write_raw(name, dtype_of<T>(), std::move(shape),
                     {reinterpret_cast<const uint8_t*>(data.data()), data.size_bytes()});
  }

  Section write_raw(const std::string& name, const std::string& dtype,
                    std::vector<size_t> shape, std::span<const uint8_t> bytes);
  void close();

 private:
  std::ofstream out_;
  std::string blob_name_;
  uint64_t offset_ = 0;
};

// Reads and checksum-verifies one section. Throws DataError on a missing or
// truncated blob, dtype mismatch, or checksum failure.
std::vector<uint8_t> read_section_bytes(const std::filesystem::path& manifest_dir,
                                        const Section& s);

template <typename T>
std::vector<T> read_section(const std::filesystem::path& manifest_dir, const Section& s) {
  if (s.dtype != dtype_of<T>()) {
    throw DataError("section '" + s.name + "' has dtype " + s.dtype + ", expected " +
                    dtype_of<T>());
  }
  const std::vector<uint8_t> bytes = read_section_bytes(manifest_dir, s);
  std::vector<T> out(bytes.size() / sizeof(T));
  std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
  return out;
}

std::string shape_to_string(const std::vector<size_t>& shape);
std::vector<size_t> shape_from_string(const std::string& s);

// Formats a double so that parsing it back yields the identical value.
std::string exact(double v);

}  // namespace fingerloc::io

#endif  // FINGERLOC_IO_H_
