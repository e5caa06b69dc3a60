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

#include "lmfield/tps_warp.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "json_detail.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/radiance_field.hpp"
#include "lmfield/sampling.hpp"

namespace lmfield {

namespace {

constexpr double kMinControlSpacing = 1e-9;
constexpr double kCoplanarTolerance = 1e-9;
constexpr double kMinReciprocalCondition = 1e-12;
constexpr double kSideConditionTolerance = 1e-8;

// U expressed through the squared distance: r^2 ln r = s ln(s) / 2.
inline double kernel_from_squared(double s) {
  return s > 0.0 ? 0.5 * s * std::log(s) : 0.0;
}

void check_points(const Points3& points, const char* what) {
  if (!points.allFinite()) {
    throw InvalidArgument(std::string(what) + " contain non-finite values");
  }
}

}  // namespace

double kernel_u(double r) {
  if (!(r >= 0.0)) throw InvalidArgument("kernel_u: r must be >= 0");
  return r > 0.0 ? r * r * std::log(r) : 0.0;
}

TpsSystem build_tps_system(const Points3& source, const Points3& target) {
  if (source.cols() != target.cols()) {
    throw InvalidArgument("source and target point counts differ");
  }
  const Eigen::Index n = source.cols();
  TpsSystem sys;
  sys.k.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sys.k(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double u =
          kernel_from_squared((source.col(i) - source.col(j)).squaredNorm());
      sys.k(i, j) = u;
      sys.k(j, i) = u;
    }
  }
  sys.p.resize(n, 4);
  sys.p.col(0).setOnes();
  sys.p.rightCols<3>() = source.transpose();

  sys.m = Eigen::MatrixXd::Zero(n + 4, n + 4);
  sys.m.topLeftCorner(n, n) = sys.k;
  sys.m.topRightCorner(n, 4) = sys.p;
  sys.m.bottomLeftCorner(4, n) = sys.p.transpose();

  sys.y = Eigen::MatrixXd::Zero(n + 4, 3);
  sys.y.topRows(n) = target.transpose();
  return sys;
}

TpsWarp::TpsWarp(Unchecked, Points3 control_points, Vec3 a0, Mat3 a1,
                 Points3 weights)
    : control_(std::move(control_points)),
      a0_(std::move(a0)),
      a1_(std::move(a1)),
      a1_minus_identity_(a1_ - Mat3::Identity()),
      weights_(std::move(weights)) {}

TpsWarp::TpsWarp(Points3 control_points, Vec3 a0, Mat3 a1, Points3 weights)
    : TpsWarp(Unchecked{}, std::move(control_points), std::move(a0),
              std::move(a1), std::move(weights)) {
  if (control_.cols() != weights_.cols()) {
    throw InvalidArgument("warp has " + std::to_string(control_.cols()) +
                          " control points but " +
                          std::to_string(weights_.cols()) + " weights");
  }
  check_points(control_, "control points");
  check_points(weights_, "warp weights");
  if (!a0_.allFinite() || !a1_.allFinite()) {
    throw InvalidArgument("warp affine part contains non-finite values");
  }
  if (side_condition_residual() >= kSideConditionTolerance) {
    throw InvalidArgument("warp weights violate the side conditions");
  }
}

TpsWarp TpsWarp::identity(Points3 control_points) {
  const Eigen::Index n = control_points.cols();
  return TpsWarp(Unchecked{}, std::move(control_points), Vec3::Zero(),
                 Mat3::Identity(), Points3::Zero(3, n));
}

double TpsWarp::side_condition_residual() const {
  const Vec3 sum = weights_.rowwise().sum();
  const Mat3 moment = weights_ * control_.transpose();
  return std::max(sum.cwiseAbs().maxCoeff(), moment.cwiseAbs().maxCoeff());
}

Vec3 TpsWarp::operator()(const Vec3& x) const {
  // Evaluated as x + displacement so that an all-zero displacement reproduces
  // x exactly.
  Vec3 d = a0_ + a1_minus_identity_ * x;
  const Eigen::Index n = control_.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    d += weights_.col(i) *
         kernel_from_squared((control_.col(i) - x).squaredNorm());
  }
  return x + d;
}

Vec3 warp_point(const TpsWarp& warp, const Vec3& x) { return warp(x); }

TpsWarp fit_tps(const Points3& source, const Points3& target) {
  if (source.cols() != target.cols()) {
    throw InvalidArgument("fit_tps: source has " +
                          std::to_string(source.cols()) +
                          " points, target has " +
                          std::to_string(target.cols()));
  }
  const Eigen::Index n = source.cols();
  if (n < 5) throw InvalidArgument("fit_tps: need at least 5 control points");
  check_points(source, "source points");
  check_points(target, "target points");

  double min_sq = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      min_sq = std::min(min_sq, (source.col(i) - source.col(j)).squaredNorm());
    }
  }
  if (std::sqrt(min_sq) <= kMinControlSpacing) {
    throw InvalidArgument("fit_tps: duplicate control points");
  }

  // [1 | l] has rank 4 iff the centred points span three dimensions.
  const Points3 centred = source.colwise() - source.rowwise().mean();
  const Vec3 sv = Eigen::JacobiSVD<Eigen::MatrixXd>(centred).singularValues();
  if (sv[2] <= kCoplanarTolerance * sv[0]) {
    throw InvalidArgument("fit_tps: control points are coplanar");
  }

  // Solve for the displacement target - source; the linear block absorbs the
  // identity, so A1 = I + solution block and W is unchanged.
  TpsSystem sys = build_tps_system(source, target);
  sys.y.topRows(n) -= source.transpose();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.m);
  const double rcond = lu.rcond();
  if (!(rcond >= kMinReciprocalCondition)) {
    throw NumericalError("fit_tps: interpolation system is ill-conditioned "
                         "(reciprocal condition " +
                         std::to_string(rcond) + ")");
  }
  const Eigen::MatrixXd sol = lu.solve(sys.y);
  if (!sol.allFinite()) {
    throw NumericalError("fit_tps: solve produced non-finite coefficients");
  }

  Points3 weights = sol.topRows(n).transpose();
  const Vec3 a0 = sol.row(n).transpose();
  const Mat3 linear_delta = sol.middleRows(n + 1, 3).transpose();
  TpsWarp warp(TpsWarp::Unchecked{}, source, a0,
               Mat3::Identity() + linear_delta, std::move(weights));
  warp.a1_minus_identity_ = linear_delta;
  return warp;
}

FeatureVolume warp_sample(const RadianceField& field, const TpsWarp& warp,
                          const OrientedBox& box,
                          const SamplingOptions& options) {
  return sample_volume_mapped(field, box, options,
                              [&warp](const Vec3& x) { return warp(x); });
}

std::string warp_to_json(const TpsWarp& warp) {
  using json_detail::json;
  json j;
  j["control_points"] = json_detail::columns_to_json(warp.control_points());
  j["a0"] = json_detail::to_json(warp.a0());
  j["a1"] = json_detail::rows_to_json(warp.a1());
  j["weights"] = json_detail::columns_to_json(warp.weights());
  return j.dump(2) + "\n";
}

TpsWarp warp_from_json(const std::string& text) {
  using namespace json_detail;
  const json j = parse(text);
  const json& cp = require_array(require_key(j, "control_points", ""),
                                 "/control_points");
  const json& w = require_array(require_key(j, "weights", ""), "/weights",
                                cp.size());
  Points3 control(3, cp.size());
  Points3 weights(3, cp.size());
  for (std::size_t i = 0; i < cp.size(); ++i) {
    control.col(i) = vector_of<3>(cp[i], "/control_points/" + std::to_string(i));
    weights.col(i) = vector_of<3>(w[i], "/weights/" + std::to_string(i));
  }
  const Vec3 a0 = vector_of<3>(require_key(j, "a0", ""), "/a0");
  const json& a1j = require_array(require_key(j, "a1", ""), "/a1", 3);
  Mat3 a1;
  for (int r = 0; r < 3; ++r) {
    a1.row(r) = vector_of<3>(a1j[r], "/a1/" + std::to_string(r)).transpose();
  }
  try {
    return TpsWarp(std::move(control), a0, a1, std::move(weights));
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::kSchema, e.what(), "/");
  }
}

}  // namespace lmfield
