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

#ifndef LMFIELD_RADIANCE_FIELD_HPP_
#define LMFIELD_RADIANCE_FIELD_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "lmfield/landmarks.hpp"

namespace lmfield {

struct FieldSample {
  Vec3 rgb = Vec3::Zero();  // each channel in [0, 1]
  double density = 0.0;     // >= 0, on the scale the threshold expects

  // Clamps rgb into [0, 1] and density to >= 0.
  static FieldSample make(const Vec3& rgb, double density);
};

// A queryable radiance field. Implementations must be pure and safe to call
// concurrently from many threads.
class RadianceField {
 public:
  virtual ~RadianceField() = default;
  virtual FieldSample query(const Vec3& position,
                            const Vec3& view_dir) const = 0;
};

// Axis-aligned world box [origin, origin + extent].
struct GridBox {
  Vec3 origin = Vec3::Constant(-1.0);
  Vec3 extent = Vec3::Constant(2.0);
};

// Trilinearly interpolated 4-channel grid. Node (x, y, z) sits at the centre
// of cell (x, y, z) of the box. Between the outermost node and the box face
// values are clamped to the edge node; outside the box the field is vacuum.
// View direction is ignored.
class VoxelGridField final : public RadianceField {
 public:
  static constexpr int kChannels = 4;

  // data is ordered [c][z][y][x] with x fastest.
  VoxelGridField(std::array<int, 3> dims, GridBox box,
                 std::vector<double> data);

  FieldSample query(const Vec3& position,
                    const Vec3& view_dir) const override;

  const std::array<int, 3>& dims() const noexcept { return dims_; }
  const GridBox& box() const noexcept { return box_; }
  const std::vector<double>& data() const noexcept { return data_; }
  Vec3 node_position(int x, int y, int z) const;
  double at(int c, int x, int y, int z) const {
    return data_[index(c, x, y, z)];
  }

 private:
  std::size_t index(int c, int x, int y, int z) const {
    return ((static_cast<std::size_t>(c) * dims_[2] + z) * dims_[1] + y) *
               dims_[0] +
           x;
  }

  std::array<int, 3> dims_;
  GridBox box_;
  std::vector<double> data_;
};

FieldSample query_voxel_grid(const VoxelGridField& field, const Vec3& x,
                             const Vec3& view_dir);

// Uniform density and colour everywhere.
class ConstantField final : public RadianceField {
 public:
  ConstantField(Vec3 rgb, double density)
      : sample_(FieldSample::make(rgb, density)) {}
  FieldSample query(const Vec3&, const Vec3&) const override {
    return sample_;
  }

 private:
  FieldSample sample_;
};

// Solid ball with a hard boundary: `density` inside (|x - c| <= radius),
// vacuum outside.
class SphereField final : public RadianceField {
 public:
  SphereField(Vec3 center, double radius, double density,
              Vec3 rgb = Vec3::Constant(0.5));
  FieldSample query(const Vec3& position, const Vec3&) const override;

 private:
  Vec3 center_;
  double radius_;
  FieldSample inside_;
};

// Desk-scale stand-in for a captured face field: a solid ellipsoidal head
// (density 60) and a Gaussian density blob at every landmark (peak 70), with
// colours from a per-region palette. Voxels within kMarkerRadius of a
// landmark, and closer to it than to any other landmark, carry a marker
// colour that encodes the landmark index (see decode_marker).
class SyntheticHeadField final : public RadianceField {
 public:
  static constexpr double kHeadDensity = 60.0;
  static constexpr double kBlobDensity = 70.0;
  static constexpr double kBlobSigma = 0.03;
  static constexpr double kMarkerRadius = 0.04;

  SyntheticHeadField(const Landmarks68& landmarks, std::uint64_t seed);

  FieldSample query(const Vec3& position, const Vec3& view_dir) const override;

  double density(const Vec3& position) const;
  // Upper bound on |density(a) - density(b)| / |a - b|.
  double density_lipschitz_bound() const;

  const Landmarks68& landmarks() const noexcept { return landmarks_; }
  const Vec3& head_center() const noexcept { return head_center_; }
  const Vec3& head_semi_axes() const noexcept { return head_axes_; }

 private:
  double head_density(const Vec3& p) const;

  Landmarks68 landmarks_;
  Vec3 head_center_;
  Vec3 head_axes_;
  Vec3 skin_rgb_;
};

Vec3 marker_color(int landmark_index);
// Landmark index encoded by a marker colour, or nullopt for any other colour.
std::optional<int> decode_marker(const Vec3& rgb);

// Builds a synthetic head; throws InvalidArgument if any landmark lies
// outside [-1, 1]^3.
SyntheticHeadField make_synthetic_head(const Landmarks68& landmarks,
                                       std::uint64_t seed);

// Queries `field` at every node of a dims grid over `box`, looking down -z.
VoxelGridField bake_to_grid(const RadianceField& field, const GridBox& box,
                            std::array<int, 3> dims, unsigned workers = 1);

void save_voxel_grid(const VoxelGridField& field,
                     const std::filesystem::path& path);
VoxelGridField load_voxel_grid(const std::filesystem::path& path);

}  // namespace lmfield

#endif  // LMFIELD_RADIANCE_FIELD_HPP_
