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

#ifndef LMFIELD_BINARY_IO_HPP_
#define LMFIELD_BINARY_IO_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmfield {

// Little-endian byte sink.
class ByteWriter {
 public:
  void magic(std::string_view four_cc);
  void u32(std::uint32_t v);
  void f32(float v);
  void f64(double v);

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }
  void reserve(std::size_t n) { bytes_.reserve(n); }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Little-endian byte source; every read past the end throws
// FormatError(kTruncated).
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  // Throws FormatError(kBadMagic) on mismatch.
  void expect_magic(std::string_view four_cc);
  std::uint32_t u32();
  float f32();
  double f64();

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  // Throws FormatError(kTrailingData) if unread bytes remain.
  void expect_end() const;

 private:
  void require(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path,
                       std::string_view text);

// "FLNV" grid container shared by voxel-grid fields and feature volumes:
// magic, u32 version = 1, u32 nx, ny, nz, u32 channels, f32 origin[3],
// f32 extent[3], then f32 payload ordered [c][z][y][x] with x fastest.
struct GridFile {
  std::array<std::uint32_t, 3> dims{};
  std::uint32_t channels = 0;
  std::array<float, 3> origin{};
  std::array<float, 3> extent{};
  std::vector<float> payload;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
};

std::vector<std::uint8_t> encode_grid(const GridFile& grid);
GridFile decode_grid(std::span<const std::uint8_t> bytes);
void save_grid(const GridFile& grid, const std::filesystem::path& path);
GridFile load_grid(const std::filesystem::path& path);

}  // namespace lmfield

#endif  // LMFIELD_BINARY_IO_HPP_
