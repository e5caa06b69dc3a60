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

#ifndef LMFIELD_FACE_MODEL_HPP_
#define LMFIELD_FACE_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "lmfield/landmarks.hpp"

namespace lmfield {

// Rank-3 landmark core tensor of shape (204, n_exp, n_id). Element
// (r, j, k) lives at r + 204 * (j + n_exp * k), i.e. first index fastest.
class BilinearCore {
 public:
  BilinearCore(int n_exp, int n_id, std::vector<double> data);

  int n_exp() const noexcept { return n_exp_; }
  int n_id() const noexcept { return n_id_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double operator()(int r, int j, int k) const {
    return data_[static_cast<std::size_t>(r) +
                 kLandmarkCoords * (static_cast<std::size_t>(j) +
                                    static_cast<std::size_t>(n_exp_) * k)];
  }

  // 204 x (n_exp * n_id) view; column j + n_exp * k is the slice (:, j, k).
  Eigen::Map<const Eigen::MatrixXd> unfolded() const {
    return {data_.data(), kLandmarkCoords,
            static_cast<Eigen::Index>(n_exp_) * n_id_};
  }

  // Contracts the expression mode: returns the 204 x n_id matrix whose column
  // k is sum_j exp_j * core(:, j, k).
  Eigen::MatrixXd contract_expression(const Eigen::VectorXd& exp) const;
  // Contracts the identity mode: returns the 204 x n_exp matrix whose column
  // j is sum_k id_k * core(:, j, k).
  Eigen::MatrixXd contract_identity(const Eigen::VectorXd& id) const;

  bool operator==(const BilinearCore& other) const = default;

 private:
  int n_exp_;
  int n_id_;
  std::vector<double> data_;
};

// Strongly typed weight vectors so identity and expression cannot be swapped.
struct IdentityWeights {
  Eigen::VectorXd w;
};
struct ExpressionWeights {
  Eigen::VectorXd w;
};

// Contracts the core with the expression weights, then the identity weights,
// and reshapes the 204-vector into 68 points. Throws InvalidArgument when the
// weight lengths do not match the core.
Landmarks68 generate_landmarks(const BilinearCore& core,
                               const IdentityWeights& id,
                               const ExpressionWeights& exp);

// v -> P [v; 1] for every landmark.
Landmarks68 apply_transform(const TransformMatrix& p, const Landmarks68& lm);

// Canonical neutral 68-point layout facing +z, in head units, fitting in
// roughly [-0.6, 0.6] x [-0.7, 0.45] x [0.1, 0.65].
const Landmarks68& neutral_template();

// Synthetic core tensor. Slice (j, k) is template + E_j + I_k where E_0 and
// I_0 are zero, E_1 opens the jaw, the remaining E_j are region-masked
// sinusoids of landmark index and the I_k are whole-face sinusoids
// (amplitude 0.05 head units). Weight vectors whose entries sum to one thus
// produce template + sum_j e_j E_j + sum_k i_k I_k.
BilinearCore synth_core(std::uint64_t seed, int n_exp, int n_id);

// Index of the jaw-opening expression mode in synthetic cores.
inline constexpr int kJawOpenExpression = 1;

// Unit vector e_index of the given length.
Eigen::VectorXd one_hot(int length, int index);

// Binary "FLNC" core file (see README for the layout).
void save_core(const BilinearCore& core, const std::filesystem::path& path);
BilinearCore load_core(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_core(const BilinearCore& core);
BilinearCore decode_core(const std::vector<std::uint8_t>& bytes);

}  // namespace lmfield

#endif  // LMFIELD_FACE_MODEL_HPP_
