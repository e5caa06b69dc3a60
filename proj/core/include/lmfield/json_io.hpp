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

#ifndef LMFIELD_JSON_IO_HPP_
#define LMFIELD_JSON_IO_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lmfield/fitting.hpp"
#include "lmfield/landmarks.hpp"
#include "lmfield/triangulation.hpp"
#include "lmfield/wing_loss.hpp"

namespace lmfield {

// Landmark file: JSON array of 68 [x, y, z] arrays.
std::string landmarks_to_json(const Landmarks68& lm);
Landmarks68 landmarks_from_json(const std::string& text);
void save_landmarks(const Landmarks68& lm, const std::filesystem::path& path);
Landmarks68 load_landmarks(const std::filesystem::path& path);

// Camera file: JSON array of 3x4 matrices, each an array of three rows.
std::string cameras_to_json(const std::vector<CameraPose>& cameras);
std::vector<CameraPose> cameras_from_json(const std::string& text);

// 2D observation file: one entry per view, each an array of 68 [u, v] pairs
// or null where the landmark is not visible.
using ViewObservations = std::vector<std::optional<Eigen::Vector2d>>;
std::string observations_to_json(const std::vector<ViewObservations>& views);
std::vector<ViewObservations> observations_from_json(const std::string& text);

std::string fit_report_to_json(const FitResult& result,
                               const Landmarks68& observed);
std::string region_report_to_json(const RegionReport& report);

std::string read_text(const std::filesystem::path& path);

}  // namespace lmfield

#endif  // LMFIELD_JSON_IO_HPP_
