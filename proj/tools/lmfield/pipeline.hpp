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

#ifndef LMFIELD_TOOLS_PIPELINE_HPP_
#define LMFIELD_TOOLS_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lmfield/landmarks.hpp"
#include "lmfield/sampling.hpp"
#include "lmfield/wing_loss.hpp"

namespace lmfield::pipeline {

enum class AugmentMode { kExpression, kCoarse };

const char* to_string(AugmentMode mode) noexcept;
AugmentMode parse_augment_mode(const std::string& text);

struct PipelineConfig {
  std::filesystem::path output_dir = "lmfield_out";
  std::uint64_t seed = 1;
  int n_exp = 52;
  int n_id = 50;
  int base_expressions = 20;
  int expression_count = 110;
  int field_resolution = 64;
  int resolution = kDefaultResolution;
  int augment_resolution = 32;
  double threshold = kDefaultDensityThreshold;
  bool encode = true;
  int encoding_levels = kDefaultEncodingLevels;
  WingParams wing;
  FineBoxConstants boxes;
  AugmentMode augment_mode = AugmentMode::kExpression;
  unsigned workers = 0;  // 0 = hardware concurrency

  // Relative paths in the file are resolved against its directory.
  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig from_json(const std::string& text,
                                  const std::filesystem::path& base_dir);
  std::string to_json() const;
  void validate() const;

  std::filesystem::path core_path() const { return output_dir / "core.flnc"; }
  std::filesystem::path field_path() const {
    return output_dir / "head_field.flnv";
  }
  std::filesystem::path landmarks_dir() const {
    return output_dir / "landmarks";
  }
  std::filesystem::path augment_dir() const { return output_dir / "augment"; }
};

// Independent 64-bit stream seeds derived from one master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0);

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

struct ExpressionSet {
  struct Member {
    std::string name;
    Landmarks68 landmarks;
    // Set for interpolants: landmarks = lambda * a + (1 - lambda) * b.
    std::optional<int> a;
    std::optional<int> b;
    double lambda = 1.0;
  };
  std::vector<Member> members;

  std::size_t size() const { return members.size(); }
};

// lambda * a + (1 - lambda) * b, pointwise.
Landmarks68 blend_expressions(const Landmarks68& a, const Landmarks68& b,
                              double lambda);

// Keeps the base members and appends convex combinations of random distinct
// pairs until `count` members exist.
ExpressionSet interpolate_expressions(const ExpressionSet& base, int count,
                                      std::uint64_t seed);

// Loads every *.json landmark file in `dir`, sorted by file name.
ExpressionSet load_expression_set(const std::filesystem::path& dir);
void save_expression_set(const ExpressionSet& set,
                         const std::filesystem::path& dir);

struct SynthOutputs {
  std::filesystem::path core;
  std::filesystem::path field;
  std::vector<std::filesystem::path> landmarks;
  std::filesystem::path manifest;
};

SynthOutputs run_synth(const PipelineConfig& config);

struct AugmentItem {
  int index = 0;
  std::string expression;
  std::uint64_t seed = 0;
  std::filesystem::path volume;
  std::filesystem::path landmarks;
  std::string volume_sha256;
  std::string landmarks_sha256;
  OrientedBox box;
  std::optional<AugmentTransform> transform;
};

struct AugmentOutputs {
  std::vector<AugmentItem> items;
  std::filesystem::path manifest;
};

// Reads the synth outputs under config.output_dir and writes one volume and
// one ground-truth landmark file per expression, then the manifest.
AugmentOutputs run_augment(const PipelineConfig& config);

}  // namespace lmfield::pipeline

#endif  // LMFIELD_TOOLS_PIPELINE_HPP_
