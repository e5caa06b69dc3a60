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

#include "lmfield/sampling.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "lmfield/binary_io.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/parallel.hpp"
#include "lmfield/radiance_field.hpp"

namespace lmfield {

namespace {

constexpr double kOrthonormalTolerance = 1e-9;

bool is_orthonormal(const Mat3& r) {
  return r.allFinite() &&
         (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <=
             kOrthonormalTolerance;
}

}  // namespace

void OrientedBox::validate() const {
  if (!center.allFinite()) throw InvalidArgument("box centre is not finite");
  if (!is_orthonormal(rotation)) {
    throw InvalidArgument("box rotation is not orthonormal");
  }
  if (!(half_extent > 0.0) || !std::isfinite(half_extent)) {
    throw InvalidArgument("box half extent must be positive");
  }
}

Vec3 OrientedBox::world_from_normalized(const Vec3& u) const {
  return center + rotation * ((2.0 * u.array() - 1.0) * half_extent).matrix();
}

Vec3 OrientedBox::normalized_from_world(const Vec3& x) const {
  return ((rotation.transpose() * (x - center)).array() / half_extent + 1.0) *
         0.5;
}

void SamplingOptions::validate() const {
  if (resolution < 2) throw InvalidArgument("resolution must be >= 2");
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw InvalidArgument("density threshold must be finite and >= 0");
  }
  if (encode && encoding_levels < 1) {
    throw InvalidArgument("encoding levels must be >= 1");
  }
}

std::vector<double> position_encoding(double p, int levels) {
  if (levels < 0) throw InvalidArgument("encoding levels must be >= 0");
  std::vector<double> out;
  out.reserve(1 + 2 * levels);
  out.push_back(p);
  double freq = std::numbers::pi;
  for (int k = 0; k < levels; ++k, freq *= 2.0) {
    out.push_back(std::sin(freq * p));
    out.push_back(std::cos(freq * p));
  }
  return out;
}

FeatureVolume::FeatureVolume(int resolution, int channels, OrientedBox box)
    : FeatureVolume(resolution, channels, std::move(box),
                    std::vector<double>(static_cast<std::size_t>(channels) *
                                        resolution * resolution *
                                        resolution)) {}

FeatureVolume::FeatureVolume(int resolution, int channels, OrientedBox box,
                             std::vector<double> data)
    : res_(resolution),
      channels_(channels),
      box_(std::move(box)),
      data_(std::move(data)) {
  if (res_ < 2) throw InvalidArgument("volume resolution must be >= 2");
  if (channels_ < kRawChannels) {
    throw InvalidArgument("volume needs at least 4 channels");
  }
  box_.validate();
  const std::size_t expected =
      static_cast<std::size_t>(channels_) * res_ * res_ * res_;
  if (data_.size() != expected) {
    throw InvalidArgument("volume data has " + std::to_string(data_.size()) +
                          " values, expected " + std::to_string(expected));
  }
}

Vec3 FeatureVolume::cell_center(int x, int y, int z) const {
  return box_.world_from_normalized(
      Vec3(normalized(x), normalized(y), normalized(z)));
}

std::size_t FeatureVolume::occupied_count() const {
  const std::size_t n = static_cast<std::size_t>(res_) * res_ * res_;
  const double* density = data_.data() + 3 * n;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += density[i] == 1.0;
  return count;
}

FeatureVolume sample_volume(const RadianceField& field, const OrientedBox& box,
                            const SamplingOptions& options) {
  return sample_volume_mapped(field, box, options, nullptr);
}

FeatureVolume sample_volume_mapped(const RadianceField& field,
                                   const OrientedBox& box,
                                   const SamplingOptions& options,
                                   const PositionMap& map) {
  options.validate();
  box.validate();
  const int res = options.resolution;
  const int per_axis = options.encode ? 1 + 2 * options.encoding_levels : 0;
  FeatureVolume volume(res, kRawChannels + 3 * per_axis, box);
  std::vector<double>& data = volume.mutable_data();
  const std::size_t n = static_cast<std::size_t>(res) * res * res;
  const Vec3 view = box.frontal_direction();

  parallel_for(static_cast<std::size_t>(res) * res, options.workers,
               [&](std::size_t row) {
                 const int y = static_cast<int>(row % res);
                 const int z = static_cast<int>(row / res);
                 for (int x = 0; x < res; ++x) {
                   const Vec3 grid_pos = volume.cell_center(x, y, z);
                   const FieldSample s =
                       field.query(map ? map(grid_pos) : grid_pos, view);
                   if (!(s.density >= options.threshold)) continue;
                   const std::size_t v = volume.index(0, x, y, z);
                   data[v] = s.rgb[0];
                   data[n + v] = s.rgb[1];
                   data[2 * n + v] = s.rgb[2];
                   data[3 * n + v] = 1.0;
                 }
               });

  if (per_axis > 0) {
    std::vector<std::vector<double>> table(res);
    for (int i = 0; i < res; ++i) {
      table[i] = position_encoding(volume.normalized(i), options.encoding_levels);
    }
    for (int z = 0; z < res; ++z) {
      for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
          const std::array<const std::vector<double>*, 3> axes = {
              &table[x], &table[y], &table[z]};
          for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < per_axis; ++c) {
              data[volume.index(kRawChannels + a * per_axis + c, x, y, z)] =
                  (*axes[a])[c];
            }
          }
        }
      }
    }
  }
  return volume;
}

Mat3 rotation_factor(const Mat3& linear) {
  const Eigen::JacobiSVD<Mat3> svd(linear,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!linear.allFinite() || !(sv[2] > 1e-9 * sv[0]) || sv[0] == 0.0) {
    throw InvalidArgument("head transform has a singular linear part");
  }
  if (linear.determinant() <= 0.0) {
    throw InvalidArgument("head transform reverses orientation");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace {

template <std::size_t N>
Vec3 region_mean(const Landmarks68& lm, const std::array<int, N>& idx) {
  Vec3 sum = Vec3::Zero();
  for (int i : idx) sum += lm.point(i);
  return sum / static_cast<double>(N);
}

}  // namespace

FineBoxes fine_boxes(const Landmarks68& coarse, const TransformMatrix& head,
                     const FineBoxConstants& constants) {
  const Mat3 rotation = rotation_factor(head.linear());
  const double scale = coarse.spread();
  if (!(scale > 0.0)) throw InvalidArgument("landmarks have zero spread");
  auto make = [&](const Vec3& center, double factor) {
    OrientedBox box;
    box.center = center;
    box.rotation = rotation;
    box.half_extent = factor * constants.enlargement * scale;
    box.validate();
    return box;
  };
  FineBoxes boxes;
  boxes.face = make(coarse.centroid(), constants.face);
  boxes.left_eye = make(region_mean(coarse, regions::kLeftEye), constants.eye);
  boxes.right_eye =
      make(region_mean(coarse, regions::kRightEye), constants.eye);
  boxes.mouth = make(region_mean(coarse, regions::kMouth), constants.mouth);
  return boxes;
}

void AugmentTransform::validate() const {
  if (!(tau >= 2.0 && tau <= 3.0)) {
    throw InvalidArgument("augmentation scale must lie in [2, 3]");
  }
  if (!is_orthonormal(r) || std::abs(r.determinant() - 1.0) > 1e-9) {
    throw InvalidArgument("augmentation rotation is not in SO(3)");
  }
  if (!t.allFinite() || (t.array().abs() > 1.0).any()) {
    throw InvalidArgument("augmentation translation must lie in [-1, 1]^3");
  }
}

AugmentTransform random_augment(std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> scale(2.0, 3.0);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  AugmentTransform a;
  a.tau = scale(engine);
  for (int i = 0; i < 3; ++i) a.t[i] = shift(engine);
  a.r = random_rotation(engine);
  return a;
}

OrientedBox apply_augment(const AugmentTransform& a, const OrientedBox& box) {
  a.validate();
  box.validate();
  OrientedBox out;
  out.center = a.apply(box.center);
  out.rotation = a.r * box.rotation;
  out.half_extent = a.tau * box.half_extent;
  return out;
}

std::array<std::optional<Vec3>, kNumLandmarks> locate_markers(
    const FeatureVolume& volume) {
  const int res = volume.resolution();
  std::array<Vec3, kNumLandmarks> sum;
  sum.fill(Vec3::Zero());
  std::array<int, kNumLandmarks> count{};
  for (int z = 0; z < res; ++z) {
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) {
        if (volume.at(3, x, y, z) != 1.0) continue;
        const auto id = decode_marker(Vec3(volume.at(0, x, y, z),
                                           volume.at(1, x, y, z),
                                           volume.at(2, x, y, z)));
        if (!id) continue;
        sum[*id] += volume.cell_center(x, y, z);
        ++count[*id];
      }
    }
  }
  std::array<std::optional<Vec3>, kNumLandmarks> out;
  for (int i = 0; i < kNumLandmarks; ++i) {
    if (count[i] > 0) out[i] = sum[i] / count[i];
  }
  return out;
}

void save_feature_volume(const FeatureVolume& volume,
                         const std::filesystem::path& path) {
  GridFile grid;
  const auto res = static_cast<std::uint32_t>(volume.resolution());
  grid.dims = {res, res, res};
  grid.channels = static_cast<std::uint32_t>(volume.channels());
  const double h = volume.box().half_extent;
  for (int a = 0; a < 3; ++a) {
    grid.origin[a] = static_cast<float>(volume.box().center[a] - h);
    grid.extent[a] = static_cast<float>(2.0 * h);
  }
  grid.payload.assign(volume.data().begin(), volume.data().end());
  save_grid(grid, path);
}

FeatureVolume load_feature_volume(const std::filesystem::path& path) {
  const GridFile grid = load_grid(path);
  if (grid.dims[0] != grid.dims[1] || grid.dims[1] != grid.dims[2]) {
    throw FormatError(FormatError::Kind::kSchema,
                      "feature volume must be cubic");
  }
  if (grid.extent[0] != grid.extent[1] || grid.extent[1] != grid.extent[2]) {
    throw FormatError(FormatError::Kind::kSchema,
                      "feature volume extent must be cubic");
  }
  OrientedBox box;
  box.half_extent = 0.5 * static_cast<double>(grid.extent[0]);
  for (int a = 0; a < 3; ++a) {
    box.center[a] = static_cast<double>(grid.origin[a]) + box.half_extent;
  }
  try {
    return FeatureVolume(static_cast<int>(grid.dims[0]),
                         static_cast<int>(grid.channels), box,
                         std::vector<double>(grid.payload.begin(),
                                             grid.payload.end()));
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::kSchema,
                      std::string("feature volume: ") + e.what());
  }
}

std::string occupied_voxels_ply(const FeatureVolume& volume) {
  const int res = volume.resolution();
  std::ostringstream body;
  body.precision(9);
  std::size_t count = 0;
  auto byte = [](double v) {
    return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (int z = 0; z < res; ++z) {
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) {
        if (volume.at(3, x, y, z) != 1.0) continue;
        const Vec3 p = volume.cell_center(x, y, z);
        body << p[0] << ' ' << p[1] << ' ' << p[2] << ' '
             << byte(volume.at(0, x, y, z)) << ' '
             << byte(volume.at(1, x, y, z)) << ' '
             << byte(volume.at(2, x, y, z)) << '\n';
        ++count;
      }
    }
  }
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << count
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         "end_header\n"
      << body.str();
  return out.str();
}

}  // namespace lmfield
