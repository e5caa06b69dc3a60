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

#ifndef LMFIELD_TPS_WARP_HPP_
#define LMFIELD_TPS_WARP_HPP_

#include <string>

#include <Eigen/Core>

#include "lmfield/landmarks.hpp"

namespace lmfield {

class RadianceField;
class FeatureVolume;
struct OrientedBox;
struct SamplingOptions;

// Radial basis kernel U(r) = r^2 ln r, with U(0) = 0. Throws InvalidArgument
// for negative r.
double kernel_u(double r);

// Dense pieces of the interpolation system
//   [K  P] [W  ]   [L']
//   [P' 0] [A  ] = [0 ]
// where K_ij = U(|l_i - l_j|), P = [1 | l_i^T] and A stacks A0^T over A1^T.
struct TpsSystem {
  Eigen::MatrixXd k;  // N x N
  Eigen::MatrixXd p;  // N x 4
  Eigen::MatrixXd m;  // (N + 4) x (N + 4)
  Eigen::MatrixXd y;  // (N + 4) x 3
};

TpsSystem build_tps_system(const Points3& source, const Points3& target);

// Fitted 3D thin-plate spline
//   f(x) = a0 + a1 x + sum_i w_i U(|l_i - x|).
class TpsWarp {
 public:
  // Validates shapes and the side conditions sum w_i = 0 and
  // sum w_i l_i^T = 0 (tolerance 1e-8). Used when loading serialized warps.
  TpsWarp(Points3 control_points, Vec3 a0, Mat3 a1, Points3 weights);

  // The exact identity map on the given control points.
  static TpsWarp identity(Points3 control_points);

  const Points3& control_points() const noexcept { return control_; }
  const Vec3& a0() const noexcept { return a0_; }
  const Mat3& a1() const noexcept { return a1_; }
  const Points3& weights() const noexcept { return weights_; }
  int size() const noexcept { return static_cast<int>(control_.cols()); }

  Vec3 operator()(const Vec3& x) const;

  // Max-abs entry of sum w_i and sum w_i l_i^T.
  double side_condition_residual() const;

 private:
  struct Unchecked {};
  TpsWarp(Unchecked, Points3 control_points, Vec3 a0, Mat3 a1,
          Points3 weights);
  friend TpsWarp fit_tps(const Points3&, const Points3&);

  Points3 control_;
  Vec3 a0_;
  Mat3 a1_;
  Mat3 a1_minus_identity_;
  Points3 weights_;
};

// Solves for the spline mapping source[i] to target[i]. Requires equal sizes,
// at least 5 distinct and non-coplanar source points. Throws InvalidArgument
// for bad inputs and NumericalError when the system's reciprocal condition
// estimate falls below 1e-12.
TpsWarp fit_tps(const Points3& source, const Points3& target);

inline TpsWarp fit_tps(const Landmarks68& source, const Landmarks68& target) {
  return fit_tps(Points3(source.matrix()), Points3(target.matrix()));
}

// Pull-back warp for expression resampling: maps target landmarks onto source
// landmarks, so sampling a source-expression field at warp(x) shows the
// target expression at x.
inline TpsWarp fit_pullback_warp(const Landmarks68& source,
                                 const Landmarks68& target) {
  return fit_tps(target, source);
}

Vec3 warp_point(const TpsWarp& warp, const Vec3& x);

// Samples `field` over `box` at warp(x) for every grid position x, then
// applies the usual threshold and encoding rules.
FeatureVolume warp_sample(const RadianceField& field, const TpsWarp& warp,
                          const OrientedBox& box,
                          const SamplingOptions& options);

std::string warp_to_json(const TpsWarp& warp);
TpsWarp warp_from_json(const std::string& text);

}  // namespace lmfield

#endif  // LMFIELD_TPS_WARP_HPP_
