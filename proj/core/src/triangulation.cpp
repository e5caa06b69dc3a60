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

#include "lmfield/triangulation.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "lmfield/errors.hpp"

namespace lmfield {

namespace {

constexpr double kRankTolerance = 1e-12;

}  // namespace

CameraPose::CameraPose(const Matrix& m) : m_(m) {
  if (!m_.allFinite()) throw InvalidArgument("camera matrix is not finite");
  const Mat3 block = m_.leftCols<3>();
  const Vec3 s = block.jacobiSvd().singularValues();
  if (!(s[2] > kRankTolerance * s[0])) {
    throw InvalidArgument("camera matrix has a singular 3x3 block");
  }
}

Eigen::Vector2d CameraPose::project(const Vec3& x) const {
  const Eigen::Vector3d h = m_.leftCols<3>() * x + m_.col(3);
  return h.head<2>() / h[2];
}

Triangulation triangulate(std::span<const Observation> observations) {
  if (observations.size() < 2) {
    throw InvalidArgument("triangulation needs at least two views, got " +
                          std::to_string(observations.size()));
  }
  Eigen::MatrixX4d a(2 * observations.size(), 4);
  for (std::size_t v = 0; v < observations.size(); ++v) {
    const Observation& obs = observations[v];
    if (!obs.pixel.allFinite()) {
      throw InvalidArgument("observation " + std::to_string(v) +
                            " is not finite");
    }
    const CameraPose::Matrix p =
        obs.camera.matrix() / obs.camera.matrix().norm();
    const double u = obs.pixel.x();
    const double w = obs.pixel.y();
    a.row(2 * v) = u * p.row(2) - p.row(0);
    a.row(2 * v + 1) = w * p.row(2) - p.row(1);
  }
  // Row equilibration leaves the null space unchanged.
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double n = a.row(r).norm();
    if (n > 0.0) a.row(r) /= n;
  }

  const Eigen::JacobiSVD<Eigen::MatrixX4d> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s[2] > kRankTolerance * s[0])) {
    throw NumericalError("triangulation system is rank deficient");
  }
  const Eigen::Vector4d x = svd.matrixV().col(3);
  if (!(std::abs(x[3]) > kRankTolerance * x.head<3>().norm())) {
    throw NumericalError("triangulated point is at infinity");
  }

  Triangulation out;
  out.point = x.head<3>() / x[3];
  double sq = 0.0;
  for (const Observation& obs : observations) {
    sq += (obs.camera.project(out.point) - obs.pixel).squaredNorm();
  }
  out.rms_reprojection_px =
      std::sqrt(sq / static_cast<double>(observations.size()));
  return out;
}

}  // namespace lmfield
