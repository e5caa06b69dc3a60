// Copyright 2026 The lmfield Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmfield/binary_io.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <random>
#include <system_error>

#include "lmfield/errors.hpp"

namespace lmfield {

const char* to_string(FormatError::Kind kind) noexcept {
  switch (kind) {
    case FormatError::Kind::kBadMagic:
      return "bad_magic";
    case FormatError::Kind::kUnsupportedVersion:
      return "unsupported_version";
    case FormatError::Kind::kTruncated:
      return "truncated";
    case FormatError::Kind::kDimensionOverflow:
      return "dimension_overflow";
    case FormatError::Kind::kTrailingData:
      return "trailing_data";
    case FormatError::Kind::kSchema:
      return "schema";
  }
  return "unknown";
}

void ByteWriter::magic(std::string_view four_cc) {
  for (char c : four_cc) bytes_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back((v >> (8 * i)) & 0xffu);
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f64(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) bytes_.push_back((bits >> (8 * i)) & 0xffu);
}

void ByteReader::require(std::size_t n) const {
  if (remaining() < n) {
    throw FormatError(FormatError::Kind::kTruncated,
                      what_ + ": unexpected end of data at byte " +
                          std::to_string(pos_));
  }
}

void ByteReader::expect_magic(std::string_view four_cc) {
  require(four_cc.size());
  for (std::size_t i = 0; i < four_cc.size(); ++i) {
    if (bytes_[pos_ + i] != static_cast<std::uint8_t>(four_cc[i])) {
      throw FormatError(FormatError::Kind::kBadMagic,
                        what_ + ": expected magic '" + std::string(four_cc) +
                            "'");
    }
  }
  pos_ += four_cc.size();
}

std::uint32_t ByteReader::u32() {
  require(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  }
  pos_ += 4;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

double ByteReader::f64() {
  require(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  }
  pos_ += 8;
  return std::bit_cast<double>(v);
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw FormatError(FormatError::Kind::kTrailingData,
                      what_ + ": " + std::to_string(remaining()) +
                          " unexpected trailing bytes");
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  // Unique temporary name so concurrent writers into one directory never
  // collide.
  thread_local std::mt19937_64 suffix_engine{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(suffix_engine());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move temporary file onto '" + path.string() + "'");
  }
}

void write_text_atomic(const std::filesystem::path& path,
                       std::string_view text) {
  write_file_atomic(
      path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                      text.size()));
}

namespace {

constexpr std::uint32_t kGridVersion = 1;
// Refuse grids above 2^31 values; the payload would not fit in memory anyway.
constexpr std::uint64_t kMaxGridValues = std::uint64_t{1} << 31;

}  // namespace

std::vector<std::uint8_t> encode_grid(const GridFile& grid) {
  const std::size_t values = grid.voxel_count() * grid.channels;
  if (grid.payload.size() != values) {
    throw InvalidArgument("grid payload size does not match its dimensions");
  }
  ByteWriter w;
  w.reserve(48 + 4 * values);
  w.magic("FLNV");
  w.u32(kGridVersion);
  for (auto d : grid.dims) w.u32(d);
  w.u32(grid.channels);
  for (float v : grid.origin) w.f32(v);
  for (float v : grid.extent) w.f32(v);
  for (float v : grid.payload) w.f32(v);
  return w.take();
}

GridFile decode_grid(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "voxel grid");
  r.expect_magic("FLNV");
  const std::uint32_t version = r.u32();
  if (version != kGridVersion) {
    throw FormatError(FormatError::Kind::kUnsupportedVersion,
                      "voxel grid: unsupported version " +
                          std::to_string(version));
  }
  GridFile grid;
  for (auto& d : grid.dims) d = r.u32();
  grid.channels = r.u32();
  std::uint64_t values = grid.channels;
  bool overflow = values > kMaxGridValues;
  for (auto d : grid.dims) {
    if (overflow || (d != 0 && values > kMaxGridValues / d)) {
      overflow = true;
      break;
    }
    values *= d;
  }
  if (overflow) {
    throw FormatError(FormatError::Kind::kDimensionOverflow,
                      "voxel grid: dimensions exceed the supported size");
  }
  for (auto& v : grid.origin) v = r.f32();
  for (auto& v : grid.extent) v = r.f32();
  if (r.remaining() < 4 * values) {
    throw FormatError(FormatError::Kind::kTruncated,
                      "voxel grid: payload shorter than dimensions require");
  }
  grid.payload.resize(values);
  for (auto& v : grid.payload) v = r.f32();
  r.expect_end();
  return grid;
}

void save_grid(const GridFile& grid, const std::filesystem::path& path) {
  write_file_atomic(path, encode_grid(grid));
}

GridFile load_grid(const std::filesystem::path& path) {
  return decode_grid(read_file(path));
}

}  // namespace lmfield
