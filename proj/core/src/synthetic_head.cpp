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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lmfield/errors.hpp"
#include "lmfield/radiance_field.hpp"

namespace lmfield {

namespace {

constexpr double kCodeScale = 128.0;

// Marker base colours (r, g) per landmark region; blue encodes the index.
std::array<double, 2> region_tint(int i) {
  if (i <= 16) return {0.55, 0.45};  // jaw
  if (i <= 26) return {0.30, 0.20};  // brows
  if (i <= 35) return {0.75, 0.50};  // nose
  if (i <= 47) return {0.15, 0.35};  // eyes
  return {0.80, 0.15};               // mouth
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

constexpr double kFalloffStart = 0.92;
constexpr double kFalloffEnd = 1.04;

}  // namespace

Vec3 marker_color(int landmark_index) {
  const auto tint = region_tint(landmark_index);
  return {tint[0], tint[1], (landmark_index + 1) / kCodeScale};
}

std::optional<int> decode_marker(const Vec3& rgb) {
  const double code = rgb[2] * kCodeScale;
  const double k = std::round(code);
  if (std::abs(code - k) > 1e-9 || k < 1.0 || k > kNumLandmarks) {
    return std::nullopt;
  }
  const int i = static_cast<int>(k) - 1;
  const auto tint = region_tint(i);
  if (std::abs(rgb[0] - tint[0]) > 1e-9 || std::abs(rgb[1] - tint[1]) > 1e-9) {
    return std::nullopt;
  }
  return i;
}

SyntheticHeadField::SyntheticHeadField(const Landmarks68& landmarks,
                                       std::uint64_t seed)
    : landmarks_(landmarks) {
  if ((landmarks.matrix().array().abs() > 1.0).any()) {
    throw InvalidArgument("synthetic head landmarks must lie in [-1, 1]^3");
  }
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  head_center_ = Vec3(0.0, 0.05, -0.05);
  head_axes_ = Vec3(0.64, 0.85, 0.60);
  for (int a = 0; a < 3; ++a) head_axes_[a] *= 1.0 + jitter(engine);
  skin_rgb_ = Vec3(0.87, 0.68, 0.58);
  for (int a = 0; a < 3; ++a) skin_rgb_[a] += jitter(engine);
}

double SyntheticHeadField::head_density(const Vec3& p) const {
  const double q = (p - head_center_).cwiseQuotient(head_axes_).norm();
  return kHeadDensity * (1.0 - smoothstep(kFalloffStart, kFalloffEnd, q));
}

double SyntheticHeadField::density(const Vec3& p) const {
  double best_sq = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kNumLandmarks; ++i) {
    best_sq = std::min(best_sq, (landmarks_.matrix().col(i) - p).squaredNorm());
  }
  const double blob =
      kBlobDensity * std::exp(-best_sq / (2.0 * kBlobSigma * kBlobSigma));
  return std::max(head_density(p), blob);
}

double SyntheticHeadField::density_lipschitz_bound() const {
  // smoothstep' peaks at 1.5 / width; |grad q| <= 1 / smallest semi-axis.
  const double head = kHeadDensity * 1.5 / (kFalloffEnd - kFalloffStart) /
                      head_axes_.minCoeff();
  const double blob = kBlobDensity * std::exp(-0.5) / kBlobSigma;
  return std::max(head, blob);
}

FieldSample SyntheticHeadField::query(const Vec3& position,
                                      const Vec3& /*view_dir*/) const {
  int nearest = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kNumLandmarks; ++i) {
    const double d = (landmarks_.matrix().col(i) - position).squaredNorm();
    if (d < best_sq) {
      best_sq = d;
      nearest = i;
    }
  }
  const double blob =
      kBlobDensity * std::exp(-best_sq / (2.0 * kBlobSigma * kBlobSigma));
  const double density = std::max(head_density(position), blob);
  const Vec3 rgb = best_sq <= kMarkerRadius * kMarkerRadius
                       ? marker_color(nearest)
                       : skin_rgb_;
  return FieldSample::make(rgb, density);
}

SyntheticHeadField make_synthetic_head(const Landmarks68& landmarks,
                                       std::uint64_t seed) {
  return SyntheticHeadField(landmarks, seed);
}

}  // namespace lmfield
