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

#include <filesystem>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lmfield/binary_io.hpp"
#include "lmfield/errors.hpp"

namespace lmfield {
namespace {

using testing::Rng;

std::string schema_path(const std::function<void()>& f) {
  try {
    f();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::kSchema);
    return e.path();
  }
  ADD_FAILURE() << "expected a schema error";
  return {};
}

TEST(LandmarkJson, RoundTripsBitExactly) {
  Rng rng(1);
  const Landmarks68 lm = testing::jittered_template(rng, 0.3);
  EXPECT_EQ(landmarks_from_json(landmarks_to_json(lm)), lm);
  const auto path = std::filesystem::temp_directory_path() / "lmfield_lm.json";
  save_landmarks(lm, path);
  EXPECT_EQ(load_landmarks(path), lm);
  std::filesystem::remove(path);
}

TEST(LandmarkJson, SchemaErrorsPointAtOffender) {
  EXPECT_EQ(schema_path([] { landmarks_from_json("[[0,0,0]]"); }), "/");
  std::string text = "[";
  for (int i = 0; i < 68; ++i) {
    text += i == 12 ? "[0,\"x\",0]" : "[0,0,0]";
    text += i == 67 ? "]" : ",";
  }
  EXPECT_EQ(schema_path([&] { landmarks_from_json(text); }), "/12/1");
  EXPECT_EQ(schema_path([] { landmarks_from_json("{not json"); }), "/");
}

TEST(CameraJson, NestedAndFlatForms) {
  CameraPose::Matrix m;
  m << 1000, 0, 500, 10, 0, 1000, 500, 20, 0, 0, 1, 4;
  const std::vector<CameraPose> cams = {CameraPose(m)};
  const std::vector<CameraPose> back = cameras_from_json(cameras_to_json(cams));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].matrix(), m);
  const auto flat =
      cameras_from_json("[[1000,0,500,10,0,1000,500,20,0,0,1,4]]");
  EXPECT_EQ(flat[0].matrix(), m);
  EXPECT_EQ(schema_path([] { cameras_from_json("[[[1,0,0,0],[0,1,0,0]]]"); }),
            "/0");
  EXPECT_EQ(schema_path([] { cameras_from_json("[[0,0,0,0,0,0,0,0,0,0,0,1]]"); }),
            "/0");
}

TEST(ObservationJson, NullMeansMissing) {
  std::vector<ViewObservations> views(2, ViewObservations(68));
  views[0][3] = Eigen::Vector2d(1.5, 2.5);
  views[1][67] = Eigen::Vector2d(-3.0, 4.0);
  const auto back = observations_from_json(observations_to_json(views));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0][3], views[0][3]);
  EXPECT_FALSE(back[0][4].has_value());
  EXPECT_EQ(back[1][67], views[1][67]);
}

TEST(ReadText, MissingFileIsIoError) {
  EXPECT_THROW(read_text("/nonexistent/lmfield.json"), IoError);
}

TEST(AtomicWrite, LeavesNoTemporaryFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "lmfield_atomic";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "a.txt", "hello");
  write_text_atomic(dir / "a.txt", "world");
  EXPECT_EQ(read_text(dir / "a.txt"), "world");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace lmfield
