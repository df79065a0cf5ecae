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

#include "fingerloc/io.h"

#include <zlib.h>

#include <charconv>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace fingerloc::io {

namespace fs = std::filesystem;

uint32_t crc32(std::span<const uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  size_t pos = 0;
  while (pos < bytes.size()) {
    const size_t n = std::min<size_t>(bytes.size() - pos, 1u << 30);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<uint32_t>(crc);
}

uint32_t crc32_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = in.gcount();
    if (n > 0) crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
  }
  return static_cast<uint32_t>(crc);
}

size_t dtype_size(const std::string& dtype) {
  if (dtype == "f32" || dtype == "i32" || dtype == "u32") return 4;
  if (dtype == "f64") return 8;
  if (dtype == "u8") return 1;
  throw DataError("unknown dtype '" + dtype + "'");
}

std::string shape_to_string(const std::vector<size_t>& shape) {
  if (shape.empty()) return "-";
  std::string s;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<size_t> shape_from_string(const std::string& s) {
  std::vector<size_t> shape;
  if (s == "-") return shape;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t end = s.find('x', start);
    const std::string part = s.substr(start, end == std::string::npos ? std::string::npos
                                                                       : end - start);
    size_t v = 0;
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || p != part.data() + part.size()) {
      throw DataError("malformed shape '" + s + "'");
    }
    shape.push_back(v);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return shape;
}

std::string exact(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : fields_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  fields_.emplace_back(key, value);
}

std::optional<std::string> Manifest::find(const std::string& key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const std::string& Manifest::get(const std::string& key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return v;
  }
  throw DataError("manifest '" + kind_ + "' lacks key '" + key + "'");
}

const Section& Manifest::section(const std::string& name) const {
  for (const Section& s : sections_) {
    if (s.name == name) return s;
  }
  throw DataError("manifest '" + kind_ + "' lacks section '" + name + "'");
}

bool Manifest::has_section(const std::string& name) const {
  for (const Section& s : sections_) {
    if (s.name == name) return true;
  }
  return false;
}

void Manifest::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "fingerloc-manifest " << kManifestFormat << '\n';
  out << "kind " << kind_ << '\n';
  for (const auto& [k, v] : fields_) out << k << ' ' << v << '\n';
  for (const Section& s : sections_) {
    out << "section " << s.name << ' ' << s.dtype << ' ' << shape_to_string(s.shape) << ' '
        << s.blob << ' ' << s.offset << ' ' << s.bytes << ' ' << std::hex
        << std::setw(8) << std::setfill('0') << s.crc << std::dec << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

Manifest Manifest::load(const fs::path& path, const std::string& expected_kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty manifest " + path.string());
  {
    std::istringstream head(line);
    std::string magic;
    int format = 0;
    head >> magic >> format;
    if (magic != "fingerloc-manifest") {
      throw DataError(path.string() + " is not a fingerloc manifest");
    }
    if (format != kManifestFormat) {
      throw DataError("manifest format version " + std::to_string(format) +
                      " is not supported (expected " + std::to_string(kManifestFormat) +
                      ")");
    }
  }
  Manifest m;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "kind") {
      m.kind_ = value;
    } else if (key == "section") {
      std::istringstream ss(value);
      Section s;
      std::string shape;
      std::string crc;
      ss >> s.name >> s.dtype >> shape >> s.blob >> s.offset >> s.bytes >> crc;
      if (!ss) throw DataError("malformed section line in " + path.string());
      s.shape = shape_from_string(shape);
      s.crc = static_cast<uint32_t>(std::stoul(crc, nullptr, 16));
      m.sections_.push_back(std::move(s));
    } else {
      m.fields_.emplace_back(key, value);
    }
  }
  if (m.kind_ != expected_kind) {
    throw DataError(path.string() + " holds a '" + m.kind_ + "' artifact, expected '" +
                    expected_kind + "'");
  }
  return m;
}

BlobWriter::BlobWriter(const fs::path& blob_path, std::string blob_name)
    : out_(blob_path, std::ios::binary | std::ios::trunc), blob_name_(std::move(blob_name)) {
  if (!out_) throw DataError("cannot write " + blob_path.string());
}

Section BlobWriter::write_raw(const std::string& name, const std::string& dtype,
                              std::vector<size_t> shape, std::span<const uint8_t> bytes) {
  Section s;
  s.name = name;
  s.dtype = dtype;
  s.shape = std::move(shape);
  s.blob = blob_name_;
  s.offset = offset_;
  s.bytes = bytes.size();
  s.crc = crc32(bytes);
  out_.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw DataError("failed writing blob " + blob_name_);
  offset_ += bytes.size();
  return s;
}

void BlobWriter::close() {
  out_.close();
  if (out_.fail()) throw DataError("failed closing blob " + blob_name_);
}

std::vector<uint8_t> read_section_bytes(const fs::path& manifest_dir, const Section& s) {
  const fs::path blob = manifest_dir / s.blob;
  std::ifstream in(blob, std::ios::binary);
  if (!in) throw DataError("missing blob " + blob.string());
  size_t expected = dtype_size(s.dtype);
  for (size_t d : s.shape) expected *= d;
  if (s.shape.empty()) expected = 0;
  if (expected != s.bytes) {
    throw DataError("section '" + s.name + "': shape " + shape_to_string(s.shape) +
                    " does not match " + std::to_string(s.bytes) + " bytes");
  }
  const uint64_t size = fs::file_size(blob);
  if (size < s.offset + s.bytes) {
    throw DataError("checksum failure: blob " + blob.string() + " is truncated (section '" +
                    s.name + "')");
  }
  std::vector<uint8_t> bytes(s.bytes);
  in.seekg(static_cast<std::streamoff>(s.offset));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(s.bytes));
  if (!in) throw DataError("failed reading section '" + s.name + "'");
  if (crc32(bytes) != s.crc) {
    throw DataError("checksum failure in section '" + s.name + "' of " + blob.string());
  }
  return bytes;
}

}  // namespace fingerloc::io
