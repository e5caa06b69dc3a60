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

#include "lmfield/landmarks.hpp"

#include <numeric>

#include "lmfield/errors.hpp"

namespace lmfield {

Landmarks68::Landmarks68() : points_(Matrix::Zero()) {}

Landmarks68::Landmarks68(const Matrix& points) : points_(points) {
  if (!points_.allFinite()) {
    throw InvalidArgument("landmarks contain non-finite coordinates");
  }
}

Landmarks68 Landmarks68::from_flat(
    const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != kLandmarkCoords) {
    throw InvalidArgument("landmark vector must have 204 entries, got " +
                          std::to_string(flat.size()));
  }
  return Landmarks68(Eigen::Map<const Matrix>(flat.data()));
}

Eigen::Matrix<double, kLandmarkCoords, 1> Landmarks68::flat() const {
  return Eigen::Map<const Eigen::Matrix<double, kLandmarkCoords, 1>>(
      points_.data());
}

double Landmarks68::spread() const {
  return (points_.colwise() - centroid()).colwise().norm().maxCoeff();
}

TransformMatrix::TransformMatrix() : m_(Matrix::Identity()) {}

TransformMatrix::TransformMatrix(const Matrix& m) : m_(m) {
  if (!m_.allFinite()) {
    throw InvalidArgument("transform matrix contains non-finite entries");
  }
}

TransformMatrix::TransformMatrix(const Mat3& linear, const Vec3& translation) {
  Matrix m;
  m << linear, translation;
  *this = TransformMatrix(m);
}

TransformMatrix TransformMatrix::then(const TransformMatrix& after) const {
  const Mat3 a = after.linear();
  return TransformMatrix(a * linear(), a * translation() + after.translation());
}

namespace regions {

std::span<const int> face() {
  static const std::array<int, kNumLandmarks> all = [] {
    std::array<int, kNumLandmarks> idx{};
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }();
  return all;
}

}  // namespace regions

}  // namespace lmfield
