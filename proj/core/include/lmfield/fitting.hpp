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

#ifndef LMFIELD_FITTING_HPP_
#define LMFIELD_FITTING_HPP_

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmfield/face_model.hpp"
#include "lmfield/landmarks.hpp"
#include "lmfield/wing_loss.hpp"

namespace lmfield {

struct ConvergenceCriteria {
  int max_iterations = 200;
  double gradient_tolerance = 1e-9;  // infinity norm
  double step_tolerance = 1e-12;     // Euclidean norm
};

// Observed landmarks plus the starting point of the optimisation. Landmarks
// whose `active` flag is false are ignored by the loss.
struct FitProblem {
  const BilinearCore* core = nullptr;
  Landmarks68 observed;
  IdentityWeights initial_id;
  ExpressionWeights initial_exp;
  TransformMatrix initial_transform;
  WingParams wing;
  ConvergenceCriteria convergence;
  std::array<bool, kNumLandmarks> active;

  // First identity and expression weights 1, all others 0, identity
  // transform, every landmark active.
  static FitProblem with_default_init(const BilinearCore& core,
                                      const Landmarks68& observed);

  void validate() const;
};

enum class Termination {
  kGradientTolerance,
  kStepTolerance,
  kNoFurtherDecrease,
  kMaxIterations,
};

const char* to_string(Termination t) noexcept;

struct FitResult {
  IdentityWeights id;
  ExpressionWeights exp;
  TransformMatrix transform;
  Landmarks68 landmarks;
  std::vector<double> loss_trace;  // initial loss, then one entry per step
  int iterations = 0;
  Termination termination = Termination::kMaxIterations;

  bool converged() const noexcept {
    return termination != Termination::kMaxIterations;
  }
  double final_loss() const { return loss_trace.back(); }
};

// Minimises the mean wing loss between P [V(id, exp); 1] and the observed
// landmarks over all identity and expression weights and the 12 entries of P.
// Each iteration takes a Levenberg-damped Gauss-Newton step on the residuals
// reweighted by the wing loss (iteratively reweighted least squares) and only
// accepts steps that lower the loss; once the damping exceeds 1e8 it falls
// back to a backtracking gradient step.
FitResult fit_landmarks(const FitProblem& problem);

// Parameter vector layout used by the fitter: [id, exp, P row-major].
Eigen::VectorXd pack_parameters(const IdentityWeights& id,
                                const ExpressionWeights& exp,
                                const TransformMatrix& p);

// P [V; 1] - observed, flattened xyz-interleaved (204 entries).
Eigen::VectorXd fit_residual(const BilinearCore& core,
                             const Landmarks68& observed,
                             const Eigen::VectorXd& params);
// d residual / d params, 204 x (n_id + n_exp + 12).
Eigen::MatrixXd fit_jacobian(const BilinearCore& core,
                             const Eigen::VectorXd& params);

double landmark_rmse(const Landmarks68& a, const Landmarks68& b);

}  // namespace lmfield

#endif  // LMFIELD_FITTING_HPP_
