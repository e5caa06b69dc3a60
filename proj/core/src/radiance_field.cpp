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

#include "lmfield/radiance_field.hpp"

#include <algorithm>
#include <cmath>

#include "lmfield/binary_io.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/parallel.hpp"

namespace lmfield {

FieldSample FieldSample::make(const Vec3& rgb, double density) {
  FieldSample s;
  s.rgb = rgb.cwiseMax(0.0).cwiseMin(1.0);
  s.density = std::max(0.0, density);
  return s;
}

VoxelGridField::VoxelGridField(std::array<int, 3> dims, GridBox box,
                               std::vector<double> data)
    : dims_(dims), box_(std::move(box)), data_(std::move(data)) {
  for (int d : dims_) {
    if (d < 2) throw InvalidArgument("voxel grid needs >= 2 nodes per axis");
  }
  if (!box_.origin.allFinite() || !box_.extent.allFinite() ||
      (box_.extent.array() <= 0.0).any()) {
    throw InvalidArgument("voxel grid box must be finite with positive extent");
  }
  const std::size_t expected = static_cast<std::size_t>(kChannels) * dims_[0] *
                               dims_[1] * dims_[2];
  if (data_.size() != expected) {
    throw InvalidArgument("voxel grid data has " +
                          std::to_string(data_.size()) + " values, expected " +
                          std::to_string(expected));
  }
}

Vec3 VoxelGridField::node_position(int x, int y, int z) const {
  const Vec3 idx(x + 0.5, y + 0.5, z + 0.5);
  const Vec3 n(dims_[0], dims_[1], dims_[2]);
  return box_.origin + box_.extent.cwiseProduct(idx.cwiseQuotient(n));
}

FieldSample VoxelGridField::query(const Vec3& position, const Vec3&) const {
  std::array<int, 3> i0{};
  std::array<double, 3> t{};
  for (int a = 0; a < 3; ++a) {
    const double rel = position[a] - box_.origin[a];
    if (!(rel >= 0.0 && rel <= box_.extent[a])) return FieldSample{};
    const int n = dims_[a];
    const double u = std::clamp(rel / box_.extent[a] * n - 0.5, 0.0,
                                static_cast<double>(n - 1));
    i0[a] = std::min(static_cast<int>(std::floor(u)), n - 2);
    t[a] = u - i0[a];
  }
  std::array<double, kChannels> acc{};
  for (int corner = 0; corner < 8; ++corner) {
    const int dx = corner & 1;
    const int dy = (corner >> 1) & 1;
    const int dz = (corner >> 2) & 1;
    const double w = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) *
                     (dz ? t[2] : 1.0 - t[2]);
    if (w == 0.0) continue;
    for (int c = 0; c < kChannels; ++c) {
      acc[c] += w * at(c, i0[0] + dx, i0[1] + dy, i0[2] + dz);
    }
  }
  return FieldSample::make(Vec3(acc[0], acc[1], acc[2]), acc[3]);
}

FieldSample query_voxel_grid(const VoxelGridField& field, const Vec3& x,
                             const Vec3& view_dir) {
  return field.query(x, view_dir);
}

SphereField::SphereField(Vec3 center, double radius, double density, Vec3 rgb)
    : center_(std::move(center)),
      radius_(radius),
      inside_(FieldSample::make(rgb, density)) {
  if (!(radius_ > 0.0)) throw InvalidArgument("sphere radius must be > 0");
}

FieldSample SphereField::query(const Vec3& position, const Vec3&) const {
  return (position - center_).squaredNorm() <= radius_ * radius_
             ? inside_
             : FieldSample{};
}

VoxelGridField bake_to_grid(const RadianceField& field, const GridBox& box,
                            std::array<int, 3> dims, unsigned workers) {
  for (int d : dims) {
    if (d < 2) throw InvalidArgument("bake_to_grid: dims must be >= 2");
  }
  const std::size_t plane = static_cast<std::size_t>(dims[0]) * dims[1];
  const std::size_t nodes = plane * dims[2];
  // Node positions only depend on the box; a placeholder grid provides them.
  const VoxelGridField layout(dims, box,
                              std::vector<double>(VoxelGridField::kChannels *
                                                  nodes));
  std::vector<double> data(VoxelGridField::kChannels * nodes);
  const Vec3 view(0.0, 0.0, -1.0);
  parallel_for(static_cast<std::size_t>(dims[1]) * dims[2], workers,
               [&](std::size_t row) {
                 const int y = static_cast<int>(row % dims[1]);
                 const int z = static_cast<int>(row / dims[1]);
                 for (int x = 0; x < dims[0]; ++x) {
                   const FieldSample s =
                       field.query(layout.node_position(x, y, z), view);
                   const std::size_t base = z * plane + y * dims[0] + x;
                   data[base] = s.rgb[0];
                   data[nodes + base] = s.rgb[1];
                   data[2 * nodes + base] = s.rgb[2];
                   data[3 * nodes + base] = s.density;
                 }
               });
  return VoxelGridField(dims, box, std::move(data));
}

void save_voxel_grid(const VoxelGridField& field,
                     const std::filesystem::path& path) {
  GridFile grid;
  for (int a = 0; a < 3; ++a) {
    grid.dims[a] = static_cast<std::uint32_t>(field.dims()[a]);
    grid.origin[a] = static_cast<float>(field.box().origin[a]);
    grid.extent[a] = static_cast<float>(field.box().extent[a]);
  }
  grid.channels = VoxelGridField::kChannels;
  grid.payload.assign(field.data().begin(), field.data().end());
  save_grid(grid, path);
}

VoxelGridField load_voxel_grid(const std::filesystem::path& path) {
  const GridFile grid = load_grid(path);
  if (grid.channels != VoxelGridField::kChannels) {
    throw FormatError(FormatError::Kind::kSchema,
                      "voxel grid field must have 4 channels, got " +
                          std::to_string(grid.channels));
  }
  GridBox box;
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) {
    dims[a] = static_cast<int>(grid.dims[a]);
    box.origin[a] = grid.origin[a];
    box.extent[a] = grid.extent[a];
  }
  try {
    return VoxelGridField(dims, box, std::vector<double>(grid.payload.begin(),
                                                         grid.payload.end()));
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::kSchema,
                      std::string("voxel grid field: ") + e.what());
  }
}

}  // namespace lmfield
