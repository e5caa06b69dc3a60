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

#include "cli.hpp"

#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "lmfield/binary_io.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/fitting.hpp"
#include "lmfield/json_io.hpp"
#include "lmfield/radiance_field.hpp"
#include "lmfield/tps_warp.hpp"
#include "lmfield/triangulation.hpp"
#include "pipeline.hpp"

namespace lmfield {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "lmfield");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lmfield_cli_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  fs::path dir_;
};

bool same_bytes(const fs::path& a, const fs::path& b) {
  return read_file(a) == read_file(b);
}

TEST_F(CliTest, HelpDocumentsDefaults) {
  const Outcome sample = run({"sample", "--help"});
  EXPECT_EQ(sample.code, 0);
  EXPECT_NE(sample.out.find("--resolution"), std::string::npos);
  EXPECT_NE(sample.out.find("[64]"), std::string::npos);
  EXPECT_NE(sample.out.find("[20]"), std::string::npos);
  EXPECT_NE(sample.out.find("[4]"), std::string::npos);
  const Outcome fit = run({"fit", "--help"});
  EXPECT_NE(fit.out.find("[10]"), std::string::npos);
  EXPECT_NE(fit.out.find("[2]"), std::string::npos);
  const Outcome eval = run({"eval", "--help"});
  EXPECT_NE(eval.out.find("[10]"), std::string::npos);
  const Outcome augment = run({"augment", "--help"});
  EXPECT_NE(augment.out.find("[110]"), std::string::npos);
  EXPECT_NE(augment.out.find("[32]"), std::string::npos);
  for (const char* cmd : {"synth", "interpolate", "warp", "triangulate",
                          "export-ply"}) {
    EXPECT_EQ(run({cmd, "--help"}).code, 0) << cmd;
  }
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  const Outcome o = run({"eval", "--pred", "/nonexistent.json"});
  EXPECT_EQ(o.code, 2);
  EXPECT_EQ(json::parse(o.err)["error"], "usage");
}

TEST_F(CliTest, SynthWritesDeclaredFilesDeterministically) {
  ASSERT_EQ(run({"synth", "--output-dir", path("a"), "--seed", "5"}).code, 0);
  ASSERT_EQ(run({"synth", "--output-dir", path("b"), "--seed", "5"}).code, 0);
  ASSERT_EQ(run({"synth", "--output-dir", path("c"), "--seed", "6"}).code, 0);

  int landmark_files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a" / "landmarks")) {
    (void)e;
    ++landmark_files;
  }
  EXPECT_EQ(landmark_files, 20);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "core.flnc"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "head_field.flnv"));

  for (const char* f : {"core.flnc", "head_field.flnv", "synth_manifest.json",
                        "landmarks/expr_07.json"}) {
    EXPECT_TRUE(same_bytes(dir_ / "a" / f, dir_ / "b" / f)) << f;
  }
  EXPECT_FALSE(same_bytes(dir_ / "a" / "landmarks/expr_07.json",
                          dir_ / "c" / "landmarks/expr_07.json"));
  const BilinearCore core = load_core(dir_ / "a" / "core.flnc");
  EXPECT_EQ(core.n_exp(), 52);
  EXPECT_EQ(core.n_id(), 50);
}

TEST_F(CliTest, ConfigPathsAreRelativeAndFlagsWin) {
  write_text_atomic(dir_ / "cfg.json",
                    R"({"output_dir": "from_config", "seed": 9,
                        "core": {"n_exp": 6, "n_id": 5},
                        "expressions": {"base": 4, "count": 7}})");
  ASSERT_EQ(run({"synth", "--config", path("cfg.json")}).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "from_config" / "landmarks" / "expr_03.json"));
  EXPECT_FALSE(fs::exists(dir_ / "from_config" / "landmarks" / "expr_04.json"));
  EXPECT_EQ(load_core(dir_ / "from_config" / "core.flnc").n_exp(), 6);

  ASSERT_EQ(run({"synth", "--config", path("cfg.json"), "--n-exp", "3",
                 "--output-dir", path("flags")})
                .code,
            0);
  EXPECT_EQ(load_core(dir_ / "flags" / "core.flnc").n_exp(), 3);
  EXPECT_EQ(load_core(dir_ / "flags" / "core.flnc").n_id(), 5);
}

TEST_F(CliTest, ConfigSchemaErrorsCarryPath) {
  write_text_atomic(dir_ / "bad.json", R"({"sampling": {"threshold": "high"}})");
  const Outcome o = run({"synth", "--config", path("bad.json")});
  EXPECT_EQ(o.code, 3);
  const json err = json::parse(o.err);
  EXPECT_EQ(err["path"], "/sampling/threshold");
  EXPECT_EQ(err["kind"], "schema");

  write_text_atomic(dir_ / "typo.json", R"({"sampling": {"resolutoin": 8}})");
  EXPECT_EQ(json::parse(run({"synth", "--config", path("typo.json")}).err)["path"],
            "/sampling/resolutoin");
}

TEST(Interpolate, BlendAndCounts) {
  testing::Rng rng(1);
  const Landmarks68 a = testing::jittered_template(rng, 0.1);
  const Landmarks68 b = testing::jittered_template(rng, 0.1);
  const Landmarks68 mid = pipeline::blend_expressions(a, b, 0.5);
  EXPECT_EQ(mid.matrix(), 0.5 * (a.matrix() + b.matrix()));

  pipeline::ExpressionSet base;
  for (int i = 0; i < 20; ++i) {
    base.members.push_back({"expr_" + std::to_string(i),
                            testing::jittered_template(rng, 0.05), {}, {}, 1.0});
  }
  const pipeline::ExpressionSet same =
      pipeline::interpolate_expressions(base, 20, 3);
  ASSERT_EQ(same.size(), 20u);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(same.members[i].landmarks, base.members[i].landmarks);
  }

  const pipeline::ExpressionSet full =
      pipeline::interpolate_expressions(base, 110, 3);
  ASSERT_EQ(full.size(), 110u);
  int interpolants = 0;
  for (const auto& m : full.members) {
    if (!m.a) continue;
    ++interpolants;
    EXPECT_NE(*m.a, *m.b);
    EXPECT_GT(m.lambda, 0.0);
    EXPECT_LT(m.lambda, 1.0);
    EXPECT_EQ(m.landmarks,
              pipeline::blend_expressions(base.members[*m.a].landmarks,
                                          base.members[*m.b].landmarks,
                                          m.lambda));
  }
  EXPECT_EQ(interpolants, 90);
  EXPECT_EQ(pipeline::interpolate_expressions(base, 110, 3).members[50].landmarks,
            full.members[50].landmarks);

  EXPECT_THROW(pipeline::interpolate_expressions(base, 10, 3), InvalidArgument);
  pipeline::ExpressionSet single;
  single.members.push_back(base.members[0]);
  EXPECT_THROW(pipeline::interpolate_expressions(single, 5, 3), InvalidArgument);
}

TEST_F(CliTest, InterpolateCommand) {
  ASSERT_EQ(run({"synth", "--output-dir", path("s"), "--n-exp", "6", "--n-id",
                 "4", "--base", "5", "--field-resolution", "8"})
                .code,
            0);
  const Outcome o = run({"interpolate", "--input", path("s/landmarks"),
                         "--output", path("x"), "--count", "12"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(json::parse(o.out)["count"], 12);
  EXPECT_EQ(pipeline::load_expression_set(dir_ / "x").size(), 12u);
  EXPECT_EQ(run({"interpolate", "--input", path("s/landmarks"), "--output",
                 path("y"), "--count", "3"})
                .code,
            2);
}

class AugmentTest : public CliTest {
 protected:
  void synth() {
    ASSERT_EQ(run({"synth", "--output-dir", path("s"), "--n-exp", "6",
                   "--n-id", "4", "--base", "4", "--field-resolution", "24",
                   "--seed", "3"})
                  .code,
              0);
  }
};

TEST_F(AugmentTest, IdentityItemEqualsPlainSample) {
  synth();
  const Outcome o = run({"augment", "--output-dir", path("s"), "--count", "6",
                         "--resolution", "12", "--workers", "3", "--seed", "3"});
  ASSERT_EQ(o.code, 0) << o.err;
  const json manifest = json::parse(read_text(dir_ / "s/augment/manifest.json"));
  ASSERT_EQ(manifest["items"].size(), 6u);
  EXPECT_EQ(manifest["items"][0]["expression"], "expr_00");

  // Item 0 is the neutral expression: its warp is the identity.
  const VoxelGridField field = load_voxel_grid(dir_ / "s/head_field.flnv");
  const Landmarks68 neutral = load_landmarks(dir_ / "s/landmarks/expr_00.json");
  SamplingOptions opt;
  opt.resolution = 12;
  opt.encode = true;
  const FeatureVolume plain =
      sample_volume(field, fine_boxes(neutral, TransformMatrix()).face, opt);
  save_feature_volume(plain, dir_ / "plain.flnv");
  EXPECT_TRUE(same_bytes(dir_ / "plain.flnv", dir_ / "s/augment/items/item_000.flnv"));
  EXPECT_EQ(load_landmarks(dir_ / "s/augment/items/item_000.json"), neutral);
}

TEST_F(AugmentTest, RerunGivesIdenticalManifest) {
  synth();
  const std::vector<std::string> args = {"augment", "--output-dir", path("s"),
                                         "--count", "7", "--resolution", "10"};
  std::vector<std::string> one = args, many = args;
  one.insert(one.end(), {"--workers", "1"});
  many.insert(many.end(), {"--workers", "4"});
  ASSERT_EQ(run(one).code, 0);
  const auto first = read_file(dir_ / "s/augment/manifest.json");
  ASSERT_EQ(run(many).code, 0);
  EXPECT_EQ(read_file(dir_ / "s/augment/manifest.json"), first);
  const json m = json::parse(std::string(first.begin(), first.end()));
  for (const auto& item : m["items"]) {
    const fs::path vol = dir_ / "s/augment" / item["volume"].get<std::string>();
    EXPECT_EQ(pipeline::sha256_hex(read_file(vol)), item["volume_sha256"]);
  }
}

TEST_F(AugmentTest, CoarseModeLandmarksFollowTransform) {
  synth();
  ASSERT_EQ(run({"augment", "--output-dir", path("s"), "--count", "5",
                 "--resolution", "10", "--mode", "coarse"})
                .code,
            0);
  const json m = json::parse(read_text(dir_ / "s/augment/manifest.json"));
  EXPECT_EQ(m["mode"], "coarse");
  const pipeline::ExpressionSet set = pipeline::interpolate_expressions(
      pipeline::load_expression_set(dir_ / "s/landmarks"), 5,
      pipeline::derive_seed(1, 5));
  for (int i = 0; i < 5; ++i) {
    const json& item = m["items"][i];
    const AugmentTransform a = random_augment(item["seed"].get<std::uint64_t>());
    EXPECT_DOUBLE_EQ(item["augment"]["tau"].get<double>(), a.tau);
    const Landmarks68 gt = load_landmarks(
        dir_ / "s/augment" / item["landmarks"].get<std::string>());
    for (int k = 0; k < kNumLandmarks; ++k) {
      EXPECT_LE((a.apply(gt.point(k)) - set.members[i].landmarks.point(k)).norm(),
                1e-12);
    }
  }
}

TEST_F(CliTest, SampleWarpAndExport) {
  ASSERT_EQ(run({"synth", "--output-dir", path("s"), "--n-exp", "4", "--n-id",
                 "3", "--base", "3", "--field-resolution", "16"})
                .code,
            0);
  const Outcome s = run({"sample", "--field", path("s/head_field.flnv"),
                         "--landmarks", path("s/landmarks/expr_00.json"),
                         "--region", "mouth", "--resolution", "8", "--encode",
                         "--output", path("mouth.flnv")});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(load_feature_volume(dir_ / "mouth.flnv").channels(), 31);

  const Outcome w = run({"warp", "--field", path("s/head_field.flnv"),
                         "--source", path("s/landmarks/expr_00.json"),
                         "--target", path("s/landmarks/expr_01.json"),
                         "--resolution", "8", "--output", path("warped.flnv"),
                         "--warp-out", path("warp.json")});
  ASSERT_EQ(w.code, 0) << w.err;
  const TpsWarp tps = warp_from_json(read_text(dir_ / "warp.json"));
  const Landmarks68 src = load_landmarks(dir_ / "s/landmarks/expr_00.json");
  const Landmarks68 dst = load_landmarks(dir_ / "s/landmarks/expr_01.json");
  EXPECT_LT((tps(dst.point(30)) - src.point(30)).norm(), 1e-8);

  ASSERT_EQ(run({"export-ply", "--volume", path("warped.flnv"), "--output",
                 path("w.ply")})
                .code,
            0);
  EXPECT_EQ(read_text(dir_ / "w.ply").rfind("ply\n", 0), 0u);

  const Outcome head = run({"sample", "--field", path("s/head_field.flnv"),
                            "--region", "head", "--resolution", "6",
                            "--output", path("head.flnv")});
  EXPECT_EQ(head.code, 0) << head.err;
  EXPECT_EQ(run({"sample", "--field", path("s/head_field.flnv"), "--output",
                 path("face.flnv")})
                .code,
            2);
}

TEST_F(CliTest, FitRoundTripFixture) {
  const BilinearCore core = synth_core(42, 4, 3);
  save_core(core, dir_ / "core.flnc");
  testing::Rng rng(42);
  Eigen::VectorXd id = testing::random_vector(rng, 3, 0.0, 1.0);
  id /= id.sum();
  Eigen::VectorXd exp = testing::random_vector(rng, 4, 0.0, 1.0);
  exp /= exp.sum();
  const Mat3 r = Eigen::AngleAxisd(0.2, Vec3(0.3, 1.0, 0.1).normalized())
                     .toRotationMatrix();
  const Landmarks68 observed =
      apply_transform(TransformMatrix(1.1 * r, Vec3(0.05, -0.02, 0.1)),
                      generate_landmarks(core, IdentityWeights{id},
                                         ExpressionWeights{exp}));
  save_landmarks(observed, dir_ / "observed.json");
  const Outcome o = run({"fit", "--core", path("core.flnc"), "--observed",
                         path("observed.json"), "--output", path("report.json")});
  ASSERT_EQ(o.code, 0) << o.err;
  const json report = json::parse(read_text(dir_ / "report.json"));
  EXPECT_TRUE(report["converged"].get<bool>()) << report["termination"];
  EXPECT_LT(report["rmse"].get<double>(), 1e-6);
  EXPECT_EQ(report["landmarks"].size(), 68u);
  EXPECT_GE(report["loss_trace"].size(), 1u);
}

TEST_F(CliTest, FitRejectsMalformedLandmarks) {
  save_core(synth_core(1, 2, 2), dir_ / "core.flnc");
  write_text_atomic(dir_ / "bad.json", "[[0, 0, 0], [1, 2]]");
  const Outcome o = run({"fit", "--core", path("core.flnc"), "--observed",
                         path("bad.json")});
  EXPECT_EQ(o.code, 3);
  const json err = json::parse(o.err);
  EXPECT_EQ(err["error"], "format");
  EXPECT_EQ(err["path"], "/");

  write_text_atomic(dir_ / "core.flnc", "FLNX");
  save_landmarks(neutral_template(), dir_ / "ok.json");
  const Outcome bad_core = run({"fit", "--core", path("core.flnc"),
                                "--observed", path("ok.json")});
  EXPECT_EQ(bad_core.code, 3);
  EXPECT_EQ(json::parse(bad_core.err)["kind"], "bad_magic");
}

TEST_F(CliTest, TriangulateNoiselessFixture) {
  testing::Rng rng(5);
  std::vector<CameraPose> cams;
  for (int v = 0; v < 3; ++v) {
    const Mat3 r = testing::random_rotation_matrix(rng);
    Mat3 k = Mat3::Identity();
    k(0, 0) = k(1, 1) = 1200.0;
    k(0, 2) = k(1, 2) = 500.0;
    CameraPose::Matrix m;
    m.leftCols<3>() = k * r;
    m.col(3) = k * Vec3(0.0, 0.0, 4.0);
    cams.emplace_back(m);
  }
  const Landmarks68& truth = neutral_template();
  std::vector<ViewObservations> views(3, ViewObservations(kNumLandmarks));
  for (int v = 0; v < 3; ++v) {
    for (int i = 0; i < kNumLandmarks; ++i) {
      if (v == 2 && i % 5 == 0) continue;  // occluded
      views[v][i] = cams[v].project(truth.point(i));
    }
  }
  write_text_atomic(dir_ / "cams.json", cameras_to_json(cams));
  write_text_atomic(dir_ / "obs.json", observations_to_json(views));
  const Outcome o = run({"triangulate", "--cameras", path("cams.json"),
                         "--observations", path("obs.json"), "--output",
                         path("lm.json"), "--report", path("res.json")});
  ASSERT_EQ(o.code, 0) << o.err;
  const Landmarks68 got = load_landmarks(dir_ / "lm.json");
  EXPECT_LT((got.matrix() - truth.matrix()).cwiseAbs().maxCoeff(), 1e-9);

  views[1][7].reset();
  views[2][7].reset();
  write_text_atomic(dir_ / "obs.json", observations_to_json(views));
  EXPECT_EQ(run({"triangulate", "--cameras", path("cams.json"),
                 "--observations", path("obs.json")})
                .code,
            2);
}

TEST_F(CliTest, EvalIdenticalFilesGivesZeros) {
  save_landmarks(neutral_template(), dir_ / "a.json");
  const Outcome o =
      run({"eval", "--pred", path("a.json"), "--gt", path("a.json")});
  ASSERT_EQ(o.code, 0) << o.err;
  const json j = json::parse(o.out);
  for (const char* k : {"face", "mouth", "eyes", "nose"}) {
    EXPECT_EQ(j[k].get<double>(), 0.0) << k;
  }
}

TEST_F(CliTest, UnwritableOutputIsIoError) {
  save_landmarks(neutral_template(), dir_ / "a.json");
  const Outcome o = run({"eval", "--pred", path("a.json"), "--gt",
                         path("a.json"), "--output", "/proc/lmfield/x.json"});
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(json::parse(o.err)["error"], "io");
}

}  // namespace
}  // namespace lmfield
