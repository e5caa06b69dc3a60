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

#ifndef LMFIELD_SAMPLING_HPP_
#define LMFIELD_SAMPLING_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "lmfield/landmarks.hpp"

namespace lmfield {

class RadianceField;

// Cubic sampling region: world = center + rotation * local, with local in
// [-half_extent, half_extent]^3.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  double half_extent = 1.0;

  // Throws InvalidArgument unless rotation is orthonormal (1e-9) and
  // half_extent > 0.
  void validate() const;

  // Maps a normalized grid coordinate in [0, 1]^3 into world space.
  Vec3 world_from_normalized(const Vec3& u) const;
  Vec3 normalized_from_world(const Vec3& x) const;
  // Viewing direction used for every query: the box's -z axis.
  Vec3 frontal_direction() const { return -rotation.col(2); }
};

inline constexpr int kRawChannels = 4;  // r, g, b, density
inline constexpr int kDefaultEncodingLevels = 4;
inline constexpr int kDefaultResolution = 64;
inline constexpr double kDefaultDensityThreshold = 20.0;

struct SamplingOptions {
  int resolution = kDefaultResolution;
  double threshold = kDefaultDensityThreshold;
  bool encode = false;
  int encoding_levels = kDefaultEncodingLevels;
  unsigned workers = 1;  // 0 = hardware concurrency

  void validate() const;
  int encoding_channels() const {
    return encode ? 3 * (1 + 2 * encoding_levels) : 0;
  }
};

// (p, sin 2^0 pi p, cos 2^0 pi p, ..., sin 2^{L-1} pi p, cos 2^{L-1} pi p).
std::vector<double> position_encoding(double p,
                                      int levels = kDefaultEncodingLevels);

// res^3 grid of channels ordered [c][z][y][x]. Channels 0..2 are rgb, 3 is the
// binarized density and any further channels are the position encoding of
// x, y, z in that order.
class FeatureVolume {
 public:
  FeatureVolume(int resolution, int channels, OrientedBox box);
  FeatureVolume(int resolution, int channels, OrientedBox box,
                std::vector<double> data);

  int resolution() const noexcept { return res_; }
  int channels() const noexcept { return channels_; }
  const OrientedBox& box() const noexcept { return box_; }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& mutable_data() noexcept { return data_; }

  std::size_t index(int c, int x, int y, int z) const {
    return ((static_cast<std::size_t>(c) * res_ + z) * res_ + y) * res_ + x;
  }
  double at(int c, int x, int y, int z) const {
    return data_[index(c, x, y, z)];
  }
  // Normalized coordinate of cell i: (i + 0.5) / res.
  double normalized(int i) const { return (i + 0.5) / res_; }
  Vec3 cell_center(int x, int y, int z) const;

  std::size_t occupied_count() const;
  double voxel_pitch() const { return 2.0 * box_.half_extent / res_; }

  bool operator==(const FeatureVolume& other) const {
    return res_ == other.res_ && channels_ == other.channels_ &&
           data_ == other.data_;
  }

 private:
  int res_;
  int channels_;
  OrientedBox box_;
  std::vector<double> data_;
};

// Maps a world-space grid position to the position actually queried.
using PositionMap = std::function<Vec3(const Vec3&)>;

// Queries `field` at every cell centre of `box` (optionally remapped),
// viewing along the box's -z axis. Voxels whose density is below the
// threshold become all-zero; the rest keep rgb and get density 1. Encoding
// channels are appended afterwards and never thresholded.
FeatureVolume sample_volume(const RadianceField& field, const OrientedBox& box,
                            const SamplingOptions& options);
FeatureVolume sample_volume_mapped(const RadianceField& field,
                                   const OrientedBox& box,
                                   const SamplingOptions& options,
                                   const PositionMap& map);

// Size constants for the fine sampling boxes, as multiples of the head scale
// (largest landmark distance from the centroid).
struct FineBoxConstants {
  double face = 1.0;
  double eye = 0.18;
  double mouth = 0.25;
  double enlargement = 1.15;
};

struct FineBoxes {
  OrientedBox face;
  OrientedBox left_eye;
  OrientedBox right_eye;
  OrientedBox mouth;
};

// Boxes centred on region means and aligned with the rotation factor of the
// head transform's linear part. Throws InvalidArgument when the linear part
// is singular or orientation-reversing.
FineBoxes fine_boxes(const Landmarks68& coarse, const TransformMatrix& head,
                     const FineBoxConstants& constants = {});

// Nearest rotation to a 3x3 matrix (polar factor).
Mat3 rotation_factor(const Mat3& linear);

// Coarse augmentation: every sample position S becomes tau (R S + t).
struct AugmentTransform {
  double tau = 2.0;
  Mat3 r = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  void validate() const;
  Vec3 apply(const Vec3& s) const { return tau * (r * s + t); }
  // Inverse map, taking a world point to the position it is sampled from.
  Vec3 unapply(const Vec3& x) const { return r.transpose() * (x / tau - t); }
};

// tau ~ U[2, 3], t ~ U[-1, 1]^3, R uniform on SO(3) (unit quaternion).
AugmentTransform random_augment(std::uint64_t seed);
OrientedBox apply_augment(const AugmentTransform& a, const OrientedBox& box);

// Uniformly random rotation from a seeded engine (Shoemake's unit
// quaternion construction).
template <typename Engine>
Mat3 random_rotation(Engine& engine) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u1 = unit(engine);
  const double u2 = unit(engine);
  const double u3 = unit(engine);
  constexpr double kTwoPi = 6.283185307179586476925;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(kTwoPi * u3), a * std::sin(kTwoPi * u2),
                             a * std::cos(kTwoPi * u2), b * std::sin(kTwoPi * u3));
  return q.toRotationMatrix();
}

// Centroid, in world space, of the voxels carrying each landmark's marker
// colour (see SyntheticHeadField). Landmarks with no marker voxel are nullopt.
std::array<std::optional<Vec3>, kNumLandmarks> locate_markers(
    const FeatureVolume& volume);

// FLNV export. The box's rotation is not representable in the container, so
// origin/extent describe the box in its own frame (centre -/+ half extent).
void save_feature_volume(const FeatureVolume& volume,
                         const std::filesystem::path& path);
FeatureVolume load_feature_volume(const std::filesystem::path& path);

// ASCII PLY of occupied voxel centres with 8-bit colour.
std::string occupied_voxels_ply(const FeatureVolume& volume);

}  // namespace lmfield

#endif  // LMFIELD_SAMPLING_HPP_
