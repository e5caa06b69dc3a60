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

#include "lmfield/face_model.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "lmfield/binary_io.hpp"
#include "lmfield/errors.hpp"

namespace lmfield {

BilinearCore::BilinearCore(int n_exp, int n_id, std::vector<double> data)
    : n_exp_(n_exp), n_id_(n_id), data_(std::move(data)) {
  if (n_exp_ < 1 || n_id_ < 1) {
    throw InvalidArgument("core dimensions must be positive");
  }
  const std::size_t expected = static_cast<std::size_t>(kLandmarkCoords) *
                               static_cast<std::size_t>(n_exp_) *
                               static_cast<std::size_t>(n_id_);
  if (data_.size() != expected) {
    throw InvalidArgument("core data has " + std::to_string(data_.size()) +
                          " entries, expected " + std::to_string(expected));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("core tensor contains non-finite entries");
    }
  }
}

Eigen::MatrixXd BilinearCore::contract_expression(
    const Eigen::VectorXd& exp) const {
  if (exp.size() != n_exp_) {
    throw InvalidArgument("expression weights have length " +
                          std::to_string(exp.size()) + ", core expects " +
                          std::to_string(n_exp_));
  }
  const auto unfold = unfolded();
  Eigen::MatrixXd out(kLandmarkCoords, n_id_);
  for (int k = 0; k < n_id_; ++k) {
    out.col(k).noalias() =
        unfold.middleCols(static_cast<Eigen::Index>(k) * n_exp_, n_exp_) *
        exp;
  }
  return out;
}

Eigen::MatrixXd BilinearCore::contract_identity(
    const Eigen::VectorXd& id) const {
  if (id.size() != n_id_) {
    throw InvalidArgument("identity weights have length " +
                          std::to_string(id.size()) + ", core expects " +
                          std::to_string(n_id_));
  }
  const auto unfold = unfolded();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kLandmarkCoords, n_exp_);
  for (int k = 0; k < n_id_; ++k) {
    out.noalias() +=
        id[k] *
        unfold.middleCols(static_cast<Eigen::Index>(k) * n_exp_, n_exp_);
  }
  return out;
}

Landmarks68 generate_landmarks(const BilinearCore& core,
                               const IdentityWeights& id,
                               const ExpressionWeights& exp) {
  if (id.w.size() != core.n_id()) {
    throw InvalidArgument("identity weights have length " +
                          std::to_string(id.w.size()) + ", core expects " +
                          std::to_string(core.n_id()));
  }
  const Eigen::VectorXd flat = core.contract_expression(exp.w) * id.w;
  return Landmarks68::from_flat(flat);
}

Landmarks68 apply_transform(const TransformMatrix& p, const Landmarks68& lm) {
  Landmarks68::Matrix out =
      (p.linear() * lm.matrix()).colwise() + p.translation();
  return Landmarks68(out);
}

Eigen::VectorXd one_hot(int length, int index) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(length);
  v[index] = 1.0;
  return v;
}

namespace {

// Frontal face surface: depth as a function of (x, y).
double face_depth(double x, double y) {
  return 0.42 - 0.55 * x * x - 0.15 * (y + 0.1) * (y + 0.1);
}

Landmarks68 build_template() {
  using std::numbers::pi;
  Landmarks68::Matrix p;
  auto set = [&p](int i, double x, double y, double dz) {
    p.col(i) << x, y, face_depth(x, y) + dz;
  };
  // Jaw line 0..16, ear to ear through the chin.
  for (int k = 0; k < 17; ++k) {
    const double phi = pi * k / 16.0;
    const double x = -0.6 * std::cos(phi);
    const double y = 0.12 - 0.80 * std::pow(std::sin(phi), 1.2);
    set(k, x, y, -0.12 * (1.0 - std::sin(phi)));
  }
  // Brows 17..21 and their mirror 22..26.
  for (int k = 0; k < 5; ++k) {
    const double x = -0.40 + 0.06 * k;
    const double y = 0.40 + 0.035 * std::sin(pi * k / 4.0);
    set(17 + k, x, y, 0.0);
    set(26 - k, -x, y, 0.0);
  }
  // Nose bridge 27..30, then the lower nose 31..35.
  for (int k = 0; k < 4; ++k) {
    const double y = 0.28 - 0.095 * k;
    set(27 + k, 0.0, y, 0.06 + 0.05 * k);
  }
  for (int k = 0; k < 5; ++k) {
    const double bump = 1.0 - std::abs(k - 2) / 2.0;
    set(31 + k, -0.12 + 0.06 * k, -0.06 - 0.02 * bump, 0.05 + 0.03 * bump);
  }
  // Eyes: outer corner, two upper lid points, inner corner, two lower.
  const std::array<double, 6> angles = {pi,  2 * pi / 3,  pi / 3,
                                        0.0, -pi / 3, -2 * pi / 3};
  for (int k = 0; k < 6; ++k) {
    set(36 + k, -0.28 + 0.11 * std::cos(angles[k]),
        0.22 + 0.045 * std::sin(angles[k]), 0.0);
    set(42 + k, 0.28 + 0.11 * std::cos(angles[k]),
        0.22 + 0.045 * std::sin(angles[k]), 0.0);
  }
  // Outer lip contour 48..59, starting at the right corner.
  constexpr double kMouthY = -0.33;
  for (int k = 0; k < 12; ++k) {
    const double a = pi - 2.0 * pi * k / 12.0;
    const double half_height = std::sin(a) >= 0.0 ? 0.11 : 0.12;
    set(48 + k, 0.17 * std::cos(a), kMouthY + half_height * std::sin(a), 0.02);
  }
  // Inner lip contour 60..67.
  const std::array<std::array<double, 2>, 8> inner = {{{-0.10, 0.0},
                                                       {-0.05, 0.035},
                                                       {0.0, 0.04},
                                                       {0.05, 0.035},
                                                       {0.10, 0.0},
                                                       {0.05, -0.035},
                                                       {0.0, -0.04},
                                                       {-0.05, -0.035}}};
  for (int k = 0; k < 8; ++k) {
    set(60 + k, inner[k][0], kMouthY + inner[k][1], 0.01);
  }
  return Landmarks68(p);
}

using ModeMatrix = Eigen::Matrix<double, 3, kNumLandmarks>;

constexpr double kModeAmplitude = 0.05;

ModeMatrix jaw_open_mode() {
  ModeMatrix m = ModeMatrix::Zero();
  // Smooth downward profile over chin, lower lips and lip corners.
  for (int i = 5; i <= 11; ++i) {
    m(1, i) = -std::sin(std::numbers::pi * (i - 4) / 8.0);
  }
  for (int r = 0; r < 5; ++r) {
    m(1, 55 + r) = -std::sin(std::numbers::pi * (r + 1) / 6.0);
  }
  m(1, 65) = -0.7;
  m(1, 66) = -1.0;
  m(1, 67) = -0.7;
  for (int i : {48, 54, 60, 64}) m(1, i) = -0.3;
  return kModeAmplitude * m;
}

template <typename Engine>
ModeMatrix sinusoid_mode(Engine& engine, const std::array<bool, 68>& mask) {
  std::uniform_int_distribution<int> frequency(1, 3);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  ModeMatrix m = ModeMatrix::Zero();
  for (int a = 0; a < 3; ++a) {
    const int f = frequency(engine);
    const double phi = phase(engine);
    for (int i = 0; i < kNumLandmarks; ++i) {
      if (!mask[i]) continue;
      m(a, i) = kModeAmplitude *
                std::sin(2.0 * std::numbers::pi * f * i / kNumLandmarks + phi);
    }
  }
  return m;
}

std::array<bool, 68> range_mask(std::initializer_list<std::array<int, 2>> r) {
  std::array<bool, 68> mask{};
  for (const auto& [lo, hi] : r) {
    for (int i = lo; i <= hi; ++i) mask[i] = true;
  }
  return mask;
}

}  // namespace

const Landmarks68& neutral_template() {
  static const Landmarks68 t = build_template();
  return t;
}

BilinearCore synth_core(std::uint64_t seed, int n_exp, int n_id) {
  if (n_exp < 1 || n_id < 1) {
    throw InvalidArgument("synthetic core dimensions must be positive");
  }
  std::mt19937_64 engine(seed);

  const std::array<std::array<bool, 68>, 4> expression_regions = {
      range_mask({{48, 67}}),            // mouth
      range_mask({{36, 47}}),            // eyes
      range_mask({{17, 26}}),            // brows
      range_mask({{0, 16}, {48, 59}}),   // jaw and outer lips
  };
  const std::array<bool, 68> whole_face = range_mask({{0, 67}});

  std::vector<ModeMatrix> exp_modes(n_exp, ModeMatrix::Zero());
  if (n_exp > kJawOpenExpression) exp_modes[kJawOpenExpression] = jaw_open_mode();
  for (int j = 2; j < n_exp; ++j) {
    exp_modes[j] = sinusoid_mode(engine, expression_regions[(j - 2) % 4]);
  }
  std::vector<ModeMatrix> id_modes(n_id, ModeMatrix::Zero());
  for (int k = 1; k < n_id; ++k) id_modes[k] = sinusoid_mode(engine, whole_face);

  const ModeMatrix& base = neutral_template().matrix();
  std::vector<double> data(static_cast<std::size_t>(kLandmarkCoords) * n_exp *
                           n_id);
  for (int k = 0; k < n_id; ++k) {
    for (int j = 0; j < n_exp; ++j) {
      const ModeMatrix slice = base + exp_modes[j] + id_modes[k];
      std::copy(slice.data(), slice.data() + kLandmarkCoords,
                data.begin() + static_cast<std::ptrdiff_t>(kLandmarkCoords) *
                                   (j + static_cast<std::ptrdiff_t>(n_exp) * k));
    }
  }
  return BilinearCore(n_exp, n_id, std::move(data));
}

namespace {

constexpr std::uint32_t kCoreVersion = 1;
constexpr std::uint64_t kMaxCoreValues = std::uint64_t{1} << 31;

}  // namespace

std::vector<std::uint8_t> encode_core(const BilinearCore& core) {
  ByteWriter w;
  w.reserve(20 + 8 * core.data().size());
  w.magic("FLNC");
  w.u32(kCoreVersion);
  w.u32(kLandmarkCoords);
  w.u32(static_cast<std::uint32_t>(core.n_exp()));
  w.u32(static_cast<std::uint32_t>(core.n_id()));
  for (double v : core.data()) w.f64(v);
  return w.take();
}

BilinearCore decode_core(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "core tensor");
  r.expect_magic("FLNC");
  const std::uint32_t version = r.u32();
  if (version != kCoreVersion) {
    throw FormatError(FormatError::Kind::kUnsupportedVersion,
                      "core tensor: unsupported version " +
                          std::to_string(version));
  }
  const std::uint32_t rows = r.u32();
  const std::uint32_t n_exp = r.u32();
  const std::uint32_t n_id = r.u32();
  if (rows != kLandmarkCoords) {
    throw FormatError(FormatError::Kind::kSchema,
                      "core tensor: first dimension must be 204, got " +
                          std::to_string(rows));
  }
  if (n_exp == 0 || n_id == 0) {
    throw FormatError(FormatError::Kind::kSchema,
                      "core tensor: zero-sized dimension");
  }
  const std::uint64_t slice = std::uint64_t{rows} * n_exp;
  if (slice > kMaxCoreValues || n_id > kMaxCoreValues / slice) {
    throw FormatError(FormatError::Kind::kDimensionOverflow,
                      "core tensor: dimensions exceed the supported size");
  }
  const std::uint64_t values = slice * n_id;
  if (r.remaining() < 8 * values) {
    throw FormatError(FormatError::Kind::kTruncated,
                      "core tensor: payload shorter than dimensions require");
  }
  std::vector<double> data(values);
  for (auto& v : data) v = r.f64();
  r.expect_end();
  try {
    return BilinearCore(static_cast<int>(n_exp), static_cast<int>(n_id),
                        std::move(data));
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::kSchema,
                      std::string("core tensor: ") + e.what());
  }
}

void save_core(const BilinearCore& core, const std::filesystem::path& path) {
  write_file_atomic(path, encode_core(core));
}

BilinearCore load_core(const std::filesystem::path& path) {
  return decode_core(read_file(path));
}

}  // namespace lmfield
