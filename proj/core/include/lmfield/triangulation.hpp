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

#ifndef LMFIELD_TRIANGULATION_HPP_
#define LMFIELD_TRIANGULATION_HPP_

#include <span>
#include <vector>

#include <Eigen/Core>

#include "lmfield/landmarks.hpp"

namespace lmfield {

// 3x4 projection matrix K [R | t] in pixel units.
class CameraPose {
 public:
  using Matrix = Eigen::Matrix<double, 3, 4>;

  // Throws InvalidArgument if the left 3x3 block is singular.
  explicit CameraPose(const Matrix& m);

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Vector2d project(const Vec3& x) const;

 private:
  Matrix m_;
};

struct Observation {
  CameraPose camera;
  Eigen::Vector2d pixel;
};

struct Triangulation {
  Vec3 point;
  double rms_reprojection_px = 0.0;
};

// Linear (DLT) triangulation: stacks u p3 - p1 and v p3 - p2 for every view,
// each camera scaled to unit Frobenius norm, and takes the right singular
// vector of the smallest singular value. Throws InvalidArgument for fewer
// than two views and NumericalError for rank-deficient systems or points at
// infinity.
Triangulation triangulate(std::span<const Observation> observations);

}  // namespace lmfield

#endif  // LMFIELD_TRIANGULATION_HPP_
