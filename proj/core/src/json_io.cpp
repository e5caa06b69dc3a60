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

#include "lmfield/json_io.hpp"

#include <fstream>
#include <sstream>

#include "json_detail.hpp"
#include "lmfield/binary_io.hpp"
#include "lmfield/errors.hpp"

namespace lmfield {

using json_detail::json;
using json_detail::number;
using json_detail::require_array;
using json_detail::schema_error;
using json_detail::vector_of;

std::string landmarks_to_json(const Landmarks68& lm) {
  return json_detail::columns_to_json(lm.matrix()).dump();
}

Landmarks68 landmarks_from_json(const std::string& text) {
  const json j = json_detail::parse(text);
  require_array(j, "", kNumLandmarks);
  Landmarks68::Matrix m;
  for (int i = 0; i < kNumLandmarks; ++i) {
    m.col(i) = vector_of<3>(j[i], "/" + std::to_string(i));
  }
  return Landmarks68(m);
}

void save_landmarks(const Landmarks68& lm, const std::filesystem::path& path) {
  write_text_atomic(path, landmarks_to_json(lm) + "\n");
}

Landmarks68 load_landmarks(const std::filesystem::path& path) {
  return landmarks_from_json(read_text(path));
}

std::string cameras_to_json(const std::vector<CameraPose>& cameras) {
  json out = json::array();
  for (const CameraPose& c : cameras) {
    out.push_back(json_detail::rows_to_json(c.matrix()));
  }
  return out.dump();
}

std::vector<CameraPose> cameras_from_json(const std::string& text) {
  const json j = json_detail::parse(text);
  require_array(j, "");
  std::vector<CameraPose> out;
  for (std::size_t v = 0; v < j.size(); ++v) {
    const std::string path = "/" + std::to_string(v);
    const json& cam = j[v];
    CameraPose::Matrix m;
    if (cam.is_array() && cam.size() == 12) {
      for (int k = 0; k < 12; ++k) {
        m(k / 4, k % 4) = number(cam[k], path + "/" + std::to_string(k));
      }
    } else {
      require_array(cam, path, 3);
      for (int r = 0; r < 3; ++r) {
        m.row(r) = vector_of<4>(cam[r], path + "/" + std::to_string(r))
                       .transpose();
      }
    }
    try {
      out.emplace_back(m);
    } catch (const InvalidArgument& e) {
      schema_error(path, e.what());
    }
  }
  return out;
}

std::string observations_to_json(const std::vector<ViewObservations>& views) {
  json out = json::array();
  for (const ViewObservations& view : views) {
    json jv = json::array();
    for (const auto& px : view) {
      jv.push_back(px ? json::array({px->x(), px->y()}) : json(nullptr));
    }
    out.push_back(std::move(jv));
  }
  return out.dump();
}

std::vector<ViewObservations> observations_from_json(const std::string& text) {
  const json j = json_detail::parse(text);
  require_array(j, "");
  std::vector<ViewObservations> out;
  for (std::size_t v = 0; v < j.size(); ++v) {
    const std::string path = "/" + std::to_string(v);
    require_array(j[v], path, kNumLandmarks);
    ViewObservations view(kNumLandmarks);
    for (int i = 0; i < kNumLandmarks; ++i) {
      const json& e = j[v][i];
      if (e.is_null()) continue;
      view[i] = vector_of<2>(e, path + "/" + std::to_string(i));
    }
    out.push_back(std::move(view));
  }
  return out;
}

std::string fit_report_to_json(const FitResult& result,
                               const Landmarks68& observed) {
  json out;
  out["identity"] = json_detail::to_json(result.id.w);
  out["expression"] = json_detail::to_json(result.exp.w);
  out["transform"] = json_detail::rows_to_json(result.transform.matrix());
  out["landmarks"] = json_detail::columns_to_json(result.landmarks.matrix());
  out["loss_trace"] = result.loss_trace;
  out["final_loss"] = result.final_loss();
  out["iterations"] = result.iterations;
  out["termination"] = to_string(result.termination);
  out["converged"] = result.converged();
  out["rmse"] = landmark_rmse(result.landmarks, observed);
  return out.dump(2);
}

std::string region_report_to_json(const RegionReport& report) {
  json out;
  out["face"] = report.face;
  out["mouth"] = report.mouth;
  out["eyes"] = report.eyes;
  out["nose"] = report.nose;
  return out.dump(2);
}

std::string read_text(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace lmfield
