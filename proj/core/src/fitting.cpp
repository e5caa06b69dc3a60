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

#include "lmfield/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <Eigen/QR>

#include "lmfield/errors.hpp"

namespace lmfield {

namespace {

constexpr int kTransformParams = 12;
constexpr double kInitialDamping = 1e-3;
constexpr double kMinDamping = 1e-12;
constexpr double kMaxDamping = 1e8;
// Residuals below this magnitude share the same reweighting factor.
constexpr double kWeightFloor = 1e-9;
constexpr int kMaxBacktracks = 60;

struct Params {
  Eigen::VectorXd id;
  Eigen::VectorXd exp;
  TransformMatrix::Matrix p;
};

Params unpack(const Eigen::VectorXd& theta, int n_id, int n_exp) {
  if (theta.size() != n_id + n_exp + kTransformParams) {
    throw InvalidArgument("parameter vector has length " +
                          std::to_string(theta.size()) + ", expected " +
                          std::to_string(n_id + n_exp + kTransformParams));
  }
  Params out;
  out.id = theta.head(n_id);
  out.exp = theta.segment(n_id, n_exp);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) out.p(r, c) = theta[n_id + n_exp + 4 * r + c];
  }
  return out;
}

// Model landmarks P [V; 1] as a 204-vector.
Eigen::VectorXd model_points(const BilinearCore& core, const Params& q) {
  const Eigen::VectorXd v = core.contract_expression(q.exp) * q.id;
  Eigen::Map<const Eigen::Matrix3Xd> pts(v.data(), 3, kNumLandmarks);
  Eigen::Matrix3Xd aligned =
      (q.p.leftCols<3>() * pts).colwise() + q.p.col(3);
  return Eigen::Map<const Eigen::VectorXd>(aligned.data(), kLandmarkCoords);
}

}  // namespace

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::kGradientTolerance:
      return "gradient_tolerance";
    case Termination::kStepTolerance:
      return "step_tolerance";
    case Termination::kNoFurtherDecrease:
      return "no_further_decrease";
    case Termination::kMaxIterations:
      return "max_iterations";
  }
  return "unknown";
}

FitProblem FitProblem::with_default_init(const BilinearCore& core,
                                         const Landmarks68& observed) {
  FitProblem p;
  p.core = &core;
  p.observed = observed;
  p.initial_id.w = one_hot(core.n_id(), 0);
  p.initial_exp.w = one_hot(core.n_exp(), 0);
  p.initial_transform = TransformMatrix();
  p.active.fill(true);
  return p;
}

void FitProblem::validate() const {
  if (core == nullptr) throw InvalidArgument("fit problem has no core");
  if (initial_id.w.size() != core->n_id() ||
      initial_exp.w.size() != core->n_exp()) {
    throw InvalidArgument("initial weights do not match the core dimensions");
  }
  if (!initial_id.w.allFinite() || !initial_exp.w.allFinite()) {
    throw InvalidArgument("initial weights must be finite");
  }
  const Mat3 a = initial_transform.linear();
  if (!(std::abs(a.determinant()) > 1e-12)) {
    throw InvalidArgument("initial transform is singular");
  }
  if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) {
    throw InvalidArgument("fit problem has no active landmarks");
  }
  if (convergence.max_iterations < 1) {
    throw InvalidArgument("max_iterations must be >= 1");
  }
}

Eigen::VectorXd pack_parameters(const IdentityWeights& id,
                                const ExpressionWeights& exp,
                                const TransformMatrix& p) {
  Eigen::VectorXd theta(id.w.size() + exp.w.size() + kTransformParams);
  theta << id.w, exp.w, Eigen::VectorXd::Zero(kTransformParams);
  const Eigen::Index off = id.w.size() + exp.w.size();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) theta[off + 4 * r + c] = p.matrix()(r, c);
  }
  return theta;
}

Eigen::VectorXd fit_residual(const BilinearCore& core,
                             const Landmarks68& observed,
                             const Eigen::VectorXd& params) {
  const Params q = unpack(params, core.n_id(), core.n_exp());
  return model_points(core, q) - observed.flat();
}

Eigen::MatrixXd fit_jacobian(const BilinearCore& core,
                             const Eigen::VectorXd& params) {
  const int n_id = core.n_id();
  const int n_exp = core.n_exp();
  const Params q = unpack(params, n_id, n_exp);
  const Eigen::MatrixXd d_id = core.contract_expression(q.exp);  // 204 x n_id
  const Eigen::MatrixXd d_exp = core.contract_identity(q.id);    // 204 x n_exp
  const Eigen::VectorXd v = d_id * q.id;
  const Mat3 a = q.p.leftCols<3>();

  Eigen::MatrixXd j =
      Eigen::MatrixXd::Zero(kLandmarkCoords, n_id + n_exp + kTransformParams);
  for (int i = 0; i < kNumLandmarks; ++i) {
    const int row = 3 * i;
    j.block(row, 0, 3, n_id).noalias() = a * d_id.middleRows(row, 3);
    j.block(row, n_id, 3, n_exp).noalias() = a * d_exp.middleRows(row, 3);
    for (int r = 0; r < 3; ++r) {
      const int col = n_id + n_exp + 4 * r;
      j(row + r, col + 0) = v[row + 0];
      j(row + r, col + 1) = v[row + 1];
      j(row + r, col + 2) = v[row + 2];
      j(row + r, col + 3) = 1.0;
    }
  }
  return j;
}

double landmark_rmse(const Landmarks68& a, const Landmarks68& b) {
  return std::sqrt((a.matrix() - b.matrix()).colwise().squaredNorm().mean());
}

namespace {

// Restricts the optimisation to the active landmarks' coordinates.
class ActiveSet {
 public:
  explicit ActiveSet(const std::array<bool, kNumLandmarks>& active) {
    for (int i = 0; i < kNumLandmarks; ++i) {
      if (!active[i]) continue;
      for (int a = 0; a < 3; ++a) rows_.push_back(3 * i + a);
    }
  }

  Eigen::VectorXd select(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k) out[k] = full[rows_[k]];
    return out;
  }

  Eigen::MatrixXd select_rows(const Eigen::MatrixXd& full) const {
    Eigen::MatrixXd out(rows_.size(), full.cols());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      out.row(k) = full.row(rows_[k]);
    }
    return out;
  }

 private:
  std::vector<int> rows_;
};

// Mean wing loss of a residual vector (prediction minus observation).
double residual_loss(const Eigen::VectorXd& r, const WingParams& wing) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) sum += wing.value(std::abs(r[i]));
  return sum / static_cast<double>(r.size());
}

Eigen::VectorXd residual_gradient(const Eigen::VectorXd& r,
                                  const WingParams& wing) {
  return wing_gradient(r, Eigen::VectorXd::Zero(r.size()), wing);
}

// IRLS weights psi(|r|) = wing'(|r|) / |r|, normalised to a maximum of 1.
Eigen::VectorXd irls_weights(const Eigen::VectorXd& r, const WingParams& wing) {
  Eigen::VectorXd w(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double a = std::max(std::abs(r[i]), kWeightFloor);
    w[i] = wing.slope(a) / a;
  }
  return w / w.maxCoeff();
}

}  // namespace

FitResult fit_landmarks(const FitProblem& problem) {
  problem.validate();
  const BilinearCore& core = *problem.core;
  const WingParams& wing = problem.wing;
  const ConvergenceCriteria& conv = problem.convergence;
  const ActiveSet active(problem.active);
  const Eigen::VectorXd observed = problem.observed.flat();

  auto residual = [&](const Eigen::VectorXd& theta) {
    const Params q = unpack(theta, core.n_id(), core.n_exp());
    return active.select(model_points(core, q) - observed);
  };
  auto loss_of = [&](const Eigen::VectorXd& theta) {
    const double l = residual_loss(residual(theta), wing);
    return std::isfinite(l) ? l : std::numeric_limits<double>::infinity();
  };

  Eigen::VectorXd theta = pack_parameters(
      problem.initial_id, problem.initial_exp, problem.initial_transform);
  const Eigen::Index n_params = theta.size();
  double loss = loss_of(theta);

  FitResult result;
  result.loss_trace.push_back(loss);
  result.termination = Termination::kMaxIterations;
  double damping = kInitialDamping;

  for (int iter = 0; iter < conv.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Eigen::VectorXd r = residual(theta);
    const Eigen::MatrixXd jac = active.select_rows(fit_jacobian(core, theta));
    const Eigen::VectorXd grad = jac.transpose() * residual_gradient(r, wing);
    if (grad.lpNorm<Eigen::Infinity>() < conv.gradient_tolerance) {
      result.termination = Termination::kGradientTolerance;
      break;
    }

    const Eigen::VectorXd sqrt_w = irls_weights(r, wing).cwiseSqrt();
    Eigen::MatrixXd stacked(jac.rows() + n_params, n_params);
    stacked.topRows(jac.rows()) = sqrt_w.asDiagonal() * jac;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(jac.rows() + n_params);
    rhs.head(jac.rows()) = -sqrt_w.cwiseProduct(r);

    bool accepted = false;
    bool first_attempt = true;
    bool tiny = false;
    Eigen::VectorXd step;
    double candidate_loss = loss;
    while (!accepted) {
      if (damping > kMaxDamping) {
        // Damped Gauss-Newton made no progress: backtrack along -grad.
        const double gnorm = grad.norm();
        double length = 0.1 * (1.0 + theta.norm());
        for (int b = 0; b < kMaxBacktracks && !accepted; ++b, length *= 0.5) {
          step = -grad * (length / gnorm);
          candidate_loss = loss_of(theta + step);
          accepted = candidate_loss < loss;
        }
        damping = kInitialDamping;
        break;
      }
      stacked.bottomRows(n_params) =
          std::sqrt(damping) *
          Eigen::MatrixXd::Identity(n_params, n_params);
      step = stacked.householderQr().solve(rhs);
      if (first_attempt && step.norm() < conv.step_tolerance) {
        tiny = true;
        break;
      }
      first_attempt = false;
      candidate_loss = loss_of(theta + step);
      if (candidate_loss < loss) {
        accepted = true;
        damping = std::max(damping * 0.1, kMinDamping);
      } else {
        damping *= 10.0;
      }
    }

    if (!accepted) {
      result.termination = tiny ? Termination::kStepTolerance
                               : Termination::kNoFurtherDecrease;
      break;
    }
    theta += step;
    loss = candidate_loss;
    result.loss_trace.push_back(loss);
    if (step.norm() < conv.step_tolerance) {
      result.termination = Termination::kStepTolerance;
      break;
    }
  }

  const Params q = unpack(theta, core.n_id(), core.n_exp());
  result.id.w = q.id;
  result.exp.w = q.exp;
  result.transform = TransformMatrix(q.p);
  result.landmarks =
      apply_transform(result.transform,
                      generate_landmarks(core, result.id, result.exp));
  return result;
}

}  // namespace lmfield
