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

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lmfield/errors.hpp"

namespace lmfield {
namespace {

using testing::Rng;

TEST(WingLoss, ZeroForIdenticalInputs) {
  Rng rng(1);
  const Eigen::VectorXd x = testing::random_vector(rng, kLandmarkCoords);
  EXPECT_EQ(wing_loss(x, x), 0.0);
  EXPECT_TRUE(wing_gradient(x, x).isZero(0.0));
}

TEST(WingLoss, SingleCoordinateAtEpsilon) {
  Eigen::VectorXd gt = Eigen::VectorXd::Zero(kLandmarkCoords);
  Eigen::VectorXd pred = gt;
  pred[17] = 2.0;
  EXPECT_NEAR(wing_loss(pred, gt), 10.0 * std::log(2.0) / 204.0, 1e-15);
  EXPECT_NEAR(10.0 * std::log(2.0), 6.93147, 1e-5);
}

TEST(WingLoss, BranchesAgreeAtOmega) {
  const WingParams p;
  const double small = p.omega() * std::log(1.0 + p.omega() / p.epsilon());
  const double large = p.omega() - p.c();
  EXPECT_NEAR(small, 17.91759, 1e-5);
  EXPECT_NEAR(std::abs(small - large), 0.0, 1e-12);
  EXPECT_NEAR(p.value(10.0), 10.0 * std::log(6.0), 1e-9);
}

TEST(WingLoss, PropertyBranchContinuity) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const WingParams p(testing::uniform(rng, 0.1, 50.0),
                       testing::uniform(rng, 0.1, 10.0));
    const double w = p.omega();
    const double small = w * std::log1p(w / p.epsilon());
    ASSERT_LT(std::abs(small - (w - p.c())), 1e-12);
    ASSERT_LT(std::abs(p.value(std::nextafter(w, 0.0)) - p.value(w)), 1e-12);
  }
}

TEST(WingLoss, PropertyNonnegativeEvenMonotone) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const WingParams p(testing::uniform(rng, 0.5, 20.0),
                       testing::uniform(rng, 0.5, 5.0));
    const Eigen::VectorXd gt = testing::random_vector(rng, 30, -20.0, 20.0);
    const Eigen::VectorXd pred = testing::random_vector(rng, 30, -20.0, 20.0);
    const double l = wing_loss(pred, gt, p);
    ASSERT_GT(l, 0.0);
    const Eigen::VectorXd mirrored = 2.0 * gt - pred;
    ASSERT_NEAR(wing_loss(mirrored, gt, p), l, 1e-12 * l);
    Eigen::VectorXd further = pred;
    const int i = testing::uniform_int(rng, 0, 29);
    further[i] += std::copysign(testing::uniform(rng, 0.0, 5.0), pred[i] - gt[i]);
    ASSERT_GE(wing_loss(further, gt, p), l);
  }
}

TEST(WingLoss, RejectsBadInput) {
  EXPECT_THROW(wing_loss(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4)),
               InvalidArgument);
  EXPECT_THROW(WingParams(0.0, 2.0), InvalidArgument);
  EXPECT_THROW(WingParams(10.0, -1.0), InvalidArgument);
}

TEST(WingGradient, LinearBranchSlope) {
  Eigen::VectorXd gt = Eigen::VectorXd::Zero(kLandmarkCoords);
  Eigen::VectorXd pred = gt;
  pred[3] = 12.0;
  pred[4] = -15.0;
  const Eigen::VectorXd g = wing_gradient(pred, gt);
  EXPECT_DOUBLE_EQ(g[3], 1.0 / 204.0);
  EXPECT_DOUBLE_EQ(g[4], -1.0 / 204.0);
  EXPECT_EQ(g[5], 0.0);
}

// Keeps every coordinate away from the kinks at d = 0 and d = omega.
Eigen::VectorXd offsets_away_from_kinks(Rng& rng, Eigen::Index n,
                                        const WingParams& p) {
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v;
    do {
      v = testing::uniform(rng, 0.01, 2.0 * p.omega());
    } while (std::abs(v - p.omega()) < 0.01);
    d[i] = testing::uniform(rng, 0.0, 1.0) < 0.5 ? -v : v;
  }
  return d;
}

TEST(WingGradient, PropertyMatchesCentralDifferences) {
  Rng rng(4);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const WingParams p(testing::uniform(rng, 1.0, 20.0),
                       testing::uniform(rng, 0.5, 5.0));
    const Eigen::VectorXd gt = testing::random_vector(rng, kLandmarkCoords);
    Eigen::VectorXd pred = gt + offsets_away_from_kinks(rng, kLandmarkCoords, p);
    const Eigen::VectorXd g = wing_gradient(pred, gt, p);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      const double keep = pred[i];
      pred[i] = keep + h;
      const double up = wing_loss(pred, gt, p);
      pred[i] = keep - h;
      const double down = wing_loss(pred, gt, p);
      pred[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      ASSERT_LT(std::abs(fd - g[i]) / std::abs(g[i]), 1e-5)
          << "trial " << trial << " coord " << i;
    }
  }
}

TEST(Evaluate, RegionMetrics) {
  Rng rng(5);
  const Landmarks68 gt = testing::jittered_template(rng, 0.05);
  const RegionReport zero = evaluate(gt, gt);
  EXPECT_EQ(zero.face, 0.0);
  EXPECT_EQ(zero.mouth, 0.0);
  EXPECT_EQ(zero.eyes, 0.0);
  EXPECT_EQ(zero.nose, 0.0);

  Landmarks68::Matrix m = gt.matrix();
  for (int i : regions::kMouth) m.col(i) += Vec3(0.3, -0.2, 0.1);
  const RegionReport mouth_only = evaluate(Landmarks68(m), gt);
  EXPECT_GT(mouth_only.face, 0.0);
  EXPECT_GT(mouth_only.mouth, 0.0);
  EXPECT_EQ(mouth_only.eyes, 0.0);
  EXPECT_EQ(mouth_only.nose, 0.0);

  const double d = 0.37;
  const WingParams p;
  const Landmarks68 shifted(gt.matrix().array() + d);
  EXPECT_NEAR(evaluate(shifted, gt, p).face, p.value(d), 1e-12);
}

}  // namespace
}  // namespace lmfield
