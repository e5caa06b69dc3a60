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

#ifndef LMFIELD_LANDMARKS_HPP_
#define LMFIELD_LANDMARKS_HPP_

#include <array>
#include <span>

#include <Eigen/Core>

namespace lmfield {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points3 = Eigen::Matrix3Xd;

inline constexpr int kNumLandmarks = 68;
inline constexpr int kLandmarkCoords = 3 * kNumLandmarks;  // 204

// 68 facial landmarks in head units (dataset millimetres / 100). Stored as a
// 3x68 column-major matrix, so the flat 204-vector view is xyz-interleaved.
class Landmarks68 {
 public:
  using Matrix = Eigen::Matrix<double, 3, kNumLandmarks>;

  Landmarks68();  // all zeros
  // Throws InvalidArgument if any coordinate is not finite.
  explicit Landmarks68(const Matrix& points);
  static Landmarks68 from_flat(const Eigen::Ref<const Eigen::VectorXd>& flat);

  const Matrix& matrix() const noexcept { return points_; }
  Vec3 point(int i) const { return points_.col(i); }
  Eigen::Matrix<double, kLandmarkCoords, 1> flat() const;

  Vec3 centroid() const { return points_.rowwise().mean(); }
  // Largest distance of any landmark from the centroid.
  double spread() const;

  bool operator==(const Landmarks68& other) const {
    return points_ == other.points_;
  }

 private:
  Matrix points_;
};

// 3x4 transform [A | t] acting on homogeneous points.
class TransformMatrix {
 public:
  using Matrix = Eigen::Matrix<double, 3, 4>;

  TransformMatrix();  // [I | 0]
  explicit TransformMatrix(const Matrix& m);
  TransformMatrix(const Mat3& linear, const Vec3& translation);

  const Matrix& matrix() const noexcept { return m_; }
  Mat3 linear() const { return m_.leftCols<3>(); }
  Vec3 translation() const { return m_.col(3); }

  Vec3 apply(const Vec3& p) const { return m_.leftCols<3>() * p + m_.col(3); }
  // Returns the transform equivalent to applying *this first, then `after`.
  TransformMatrix then(const TransformMatrix& after) const;

 private:
  Matrix m_;
};

// Region index subsets of the 68-point convention.
namespace regions {

inline constexpr std::array<int, 20> kMouth = {
    48, 49, 50, 51, 52, 53, 54, 55, 56, 57,
    58, 59, 60, 61, 62, 63, 64, 65, 66, 67};
inline constexpr std::array<int, 11> kLeftEye = {17, 18, 19, 20, 21, 36,
                                                 37, 38, 39, 40, 41};
inline constexpr std::array<int, 11> kRightEye = {22, 23, 24, 25, 26, 42,
                                                  43, 44, 45, 46, 47};
inline constexpr std::array<int, 22> kEyes = {
    17, 18, 19, 20, 21, 36, 37, 38, 39, 40, 41,
    22, 23, 24, 25, 26, 42, 43, 44, 45, 46, 47};
inline constexpr std::array<int, 9> kNose = {27, 28, 29, 30, 31,
                                             32, 33, 34, 35};
inline constexpr std::array<int, 17> kJaw = {0, 1, 2,  3,  4,  5,  6,  7, 8,
                                             9, 10, 11, 12, 13, 14, 15, 16};

std::span<const int> face();  // all 68

}  // namespace regions

}  // namespace lmfield

#endif  // LMFIELD_LANDMARKS_HPP_
