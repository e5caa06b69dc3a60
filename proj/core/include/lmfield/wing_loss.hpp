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

#ifndef LMFIELD_WING_LOSS_HPP_
#define LMFIELD_WING_LOSS_HPP_

#include <Eigen/Core>

#include "lmfield/landmarks.hpp"

namespace lmfield {

// Wing loss parameters; the linear-branch offset c = omega - omega ln(1 +
// omega / epsilon) is always derived, which makes the loss continuous at
// |d| = omega.
class WingParams {
 public:
  WingParams() : WingParams(10.0, 2.0) {}
  WingParams(double omega, double epsilon);

  double omega() const noexcept { return omega_; }
  double epsilon() const noexcept { return epsilon_; }
  double c() const noexcept { return c_; }

  // Per-coordinate loss of an absolute difference d >= 0.
  double value(double d) const;
  // d/dd of value(d) for d > 0.
  double slope(double d) const;

 private:
  double omega_;
  double epsilon_;
  double c_;
};

// Mean per-coordinate wing loss between two equally sized vectors.
double wing_loss(const Eigen::Ref<const Eigen::VectorXd>& pred,
                 const Eigen::Ref<const Eigen::VectorXd>& gt,
                 const WingParams& params = {});

// Gradient of wing_loss with respect to pred; the subgradient 0 is used where
// pred == gt.
Eigen::VectorXd wing_gradient(const Eigen::Ref<const Eigen::VectorXd>& pred,
                              const Eigen::Ref<const Eigen::VectorXd>& gt,
                              const WingParams& params = {});

// Average wing loss per landmark region.
struct RegionReport {
  double face = 0.0;
  double mouth = 0.0;
  double eyes = 0.0;
  double nose = 0.0;
};

RegionReport evaluate(const Landmarks68& pred, const Landmarks68& gt,
                      const WingParams& params = {});

}  // namespace lmfield

#endif  // LMFIELD_WING_LOSS_HPP_
