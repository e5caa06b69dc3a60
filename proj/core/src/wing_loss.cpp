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

#include "lmfield/wing_loss.hpp"

#include <cmath>
#include <string>

#include "lmfield/errors.hpp"

namespace lmfield {

WingParams::WingParams(double omega, double epsilon)
    : omega_(omega), epsilon_(epsilon) {
  if (!(omega_ > 0.0) || !std::isfinite(omega_) || !(epsilon_ > 0.0) ||
      !std::isfinite(epsilon_)) {
    throw InvalidArgument("wing loss omega and epsilon must be positive");
  }
  c_ = omega_ - omega_ * std::log1p(omega_ / epsilon_);
}

double WingParams::value(double d) const {
  return d < omega_ ? omega_ * std::log1p(d / epsilon_) : d - c_;
}

double WingParams::slope(double d) const {
  return d < omega_ ? omega_ / (epsilon_ + d) : 1.0;
}

namespace {

void check_lengths(Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    throw InvalidArgument("wing loss inputs differ in length (" +
                          std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
  if (a == 0) throw InvalidArgument("wing loss inputs are empty");
}

}  // namespace

double wing_loss(const Eigen::Ref<const Eigen::VectorXd>& pred,
                 const Eigen::Ref<const Eigen::VectorXd>& gt,
                 const WingParams& params) {
  check_lengths(pred.size(), gt.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    sum += params.value(std::abs(pred[i] - gt[i]));
  }
  return sum / static_cast<double>(pred.size());
}

Eigen::VectorXd wing_gradient(const Eigen::Ref<const Eigen::VectorXd>& pred,
                              const Eigen::Ref<const Eigen::VectorXd>& gt,
                              const WingParams& params) {
  check_lengths(pred.size(), gt.size());
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  Eigen::VectorXd g(pred.size());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    g[i] = d == 0.0 ? 0.0
                    : std::copysign(params.slope(std::abs(d)), d) * inv_n;
  }
  return g;
}

namespace {

template <typename Indices>
double region_loss(const Landmarks68& pred, const Landmarks68& gt,
                   const Indices& idx, const WingParams& params) {
  double sum = 0.0;
  int count = 0;
  for (int i : idx) {
    for (int a = 0; a < 3; ++a) {
      sum += params.value(std::abs(pred.matrix()(a, i) - gt.matrix()(a, i)));
      ++count;
    }
  }
  return sum / count;
}

}  // namespace

RegionReport evaluate(const Landmarks68& pred, const Landmarks68& gt,
                      const WingParams& params) {
  RegionReport r;
  r.face = region_loss(pred, gt, regions::face(), params);
  r.mouth = region_loss(pred, gt, regions::kMouth, params);
  r.eyes = region_loss(pred, gt, regions::kEyes, params);
  r.nose = region_loss(pred, gt, regions::kNose, params);
  return r;
}

}  // namespace lmfield
