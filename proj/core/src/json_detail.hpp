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

#ifndef LMFIELD_SRC_JSON_DETAIL_HPP_
#define LMFIELD_SRC_JSON_DETAIL_HPP_

#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "lmfield/errors.hpp"

namespace lmfield::json_detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path,
                                      const std::string& reason) {
  throw FormatError(FormatError::Kind::kSchema,
                    (path.empty() ? std::string("/") : path) + ": " + reason,
                    path.empty() ? "/" : path);
}

inline json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(FormatError::Kind::kSchema,
                      std::string("invalid JSON: ") + e.what(), "/");
  }
}

inline const json& require_array(const json& j, const std::string& path,
                                 std::size_t size = 0) {
  if (!j.is_array()) schema_error(path, "expected an array");
  if (size != 0 && j.size() != size) {
    schema_error(path, "expected " + std::to_string(size) +
                           " elements, got " + std::to_string(j.size()));
  }
  return j;
}

inline const json& require_key(const json& j, const std::string& key,
                               const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) schema_error(path, "missing key '" + key + "'");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(path, "expected a finite number");
  return v;
}

template <int N>
Eigen::Matrix<double, N, 1> vector_of(const json& j, const std::string& path) {
  require_array(j, path, N);
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    v[i] = number(j[i], path + "/" + std::to_string(i));
  }
  return v;
}

inline json to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json rows_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.push_back(to_json(m.row(r).transpose()));
  }
  return out;
}

inline json columns_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json out = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(to_json(m.col(c)));
  return out;
}

}  // namespace lmfield::json_detail

#endif  // LMFIELD_SRC_JSON_DETAIL_HPP_
