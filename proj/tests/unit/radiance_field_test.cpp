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

#include "lmfield/radiance_field.hpp"

#include <filesystem>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lmfield/errors.hpp"

namespace lmfield {
namespace {

using testing::Rng;

// Field whose density and colour are affine in position.
class AffineField final : public RadianceField {
 public:
  FieldSample query(const Vec3& p, const Vec3&) const override {
    FieldSample s;
    s.density = 30.0 + 4.0 * p.x() - 2.0 * p.y() + 3.0 * p.z();
    s.rgb = Vec3(0.5 + 0.1 * p.x(), 0.5 - 0.2 * p.z(), 0.4 + 0.05 * p.y());
    return s;
  }
};

VoxelGridField two_node_grid() {
  // 2 x 2 x 2 grid, density 10 at x = 0 and 30 at x = 1.
  std::vector<double> data(4 * 8, 0.0);
  for (int z = 0; z < 2; ++z) {
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 2; ++x) {
        data[((3 * 2 + z) * 2 + y) * 2 + x] = x == 0 ? 10.0 : 30.0;
      }
    }
  }
  return VoxelGridField({2, 2, 2}, GridBox{}, std::move(data));
}

TEST(VoxelGrid, NodeMidpointAndOutside) {
  const VoxelGridField g = two_node_grid();
  const Vec3 view(0, 0, -1);
  EXPECT_EQ(g.query(g.node_position(0, 0, 0), view).density, 10.0);
  EXPECT_EQ(g.query(g.node_position(1, 1, 1), view).density, 30.0);
  const Vec3 mid =
      0.5 * (g.node_position(0, 0, 0) + g.node_position(1, 0, 0));
  EXPECT_NEAR(query_voxel_grid(g, mid, view).density, 20.0, 1e-12);
  const FieldSample out = g.query(Vec3(5, 0, 0), view);
  EXPECT_EQ(out.density, 0.0);
  EXPECT_EQ(out.rgb, Vec3::Zero());
}

TEST(VoxelGrid, RejectsBadDimensions) {
  EXPECT_THROW(VoxelGridField({1, 2, 2}, GridBox{}, std::vector<double>(16)),
               InvalidArgument);
  EXPECT_THROW(VoxelGridField({2, 2, 2}, GridBox{}, std::vector<double>(31)),
               InvalidArgument);
}

TEST(VoxelGrid, ReproducesAffineFieldsInside) {
  const AffineField field;
  const VoxelGridField g = bake_to_grid(field, GridBox{}, {7, 5, 6});
  Rng rng(1);
  const Vec3 lo = g.node_position(0, 0, 0);
  const Vec3 hi = g.node_position(6, 4, 5);
  for (int trial = 0; trial < 500; ++trial) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = testing::uniform(rng, lo[a], hi[a]);
    const FieldSample got = g.query(p, Vec3(0, 0, -1));
    const FieldSample want = field.query(p, Vec3(0, 0, -1));
    ASSERT_NEAR(got.density, want.density, 1e-12);
    ASSERT_LE((got.rgb - want.rgb).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(VoxelGrid, QueriesArePure) {
  Rng rng(2);
  const SyntheticHeadField head =
      make_synthetic_head(testing::jittered_template(rng, 0.01), 3);
  const VoxelGridField g = bake_to_grid(head, GridBox{}, {12, 12, 12});
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p = testing::random_vec3(rng, -1.2, 1.2);
    const Vec3 v = testing::random_vec3(rng).normalized();
    const FieldSample a = g.query(p, v);
    const FieldSample b = g.query(p, v);
    ASSERT_EQ(a.density, b.density);
    ASSERT_EQ(a.rgb, b.rgb);
    ASSERT_EQ(head.query(p, v).density, head.query(p, v).density);
  }
}

TEST(BakeToGrid, NodeValuesMatchField) {
  Rng rng(3);
  const SyntheticHeadField head =
      make_synthetic_head(testing::jittered_template(rng, 0.01), 4);
  const VoxelGridField g = bake_to_grid(head, GridBox{}, {9, 10, 11});
  const Vec3 view(0, 0, -1);
  for (int z = 0; z < 11; ++z) {
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 9; ++x) {
        const Vec3 p = g.node_position(x, y, z);
        const FieldSample want = head.query(p, view);
        const FieldSample got = g.query(p, view);
        ASSERT_NEAR(got.density, want.density, 1e-12);
        ASSERT_LE((got.rgb - want.rgb).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(BakeToGrid, ConstantFieldGivesEqualNodes) {
  const ConstantField field(Vec3(0.2, 0.4, 0.6), 33.0);
  const VoxelGridField g = bake_to_grid(field, GridBox{}, {4, 4, 4});
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 64; ++i) {
      EXPECT_EQ(g.data()[c * 64 + i], g.data()[c * 64]);
    }
  }
  EXPECT_EQ(g.at(3, 1, 2, 3), 33.0);
}

TEST(BakeToGrid, OffNodeErrorWithinLipschitzBound) {
  Rng rng(4);
  const SyntheticHeadField head =
      make_synthetic_head(testing::jittered_template(rng, 0.01), 5);
  const VoxelGridField g = bake_to_grid(head, GridBox{}, {64, 64, 64}, 0);
  // Any point lies within half a cell diagonal of every node it blends.
  const double cell = 2.0 / 64;
  const double bound =
      head.density_lipschitz_bound() * std::sqrt(3.0) * cell;
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec3 p = testing::random_vec3(rng, -0.95, 0.95);
    const double err = std::abs(g.query(p, Vec3(0, 0, -1)).density -
                                head.density(p));
    ASSERT_LE(err, bound) << p.transpose();
  }
}

TEST(SyntheticHead, DenseAtLandmarksEmptyFarAway) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Landmarks68 lm = testing::jittered_template(rng, 0.02);
    const SyntheticHeadField head = make_synthetic_head(lm, trial);
    for (int i = 0; i < kNumLandmarks; ++i) {
      ASSERT_GE(head.query(lm.point(i), Vec3(0, 0, -1)).density, 40.0);
    }
    EXPECT_LT(head.query(Vec3(5, 5, 5), Vec3(0, 0, -1)).density, 1.0);
  }
}

TEST(SyntheticHead, DeterministicPerSeed) {
  const Landmarks68& lm = neutral_template();
  const SyntheticHeadField a = make_synthetic_head(lm, 17);
  const SyntheticHeadField b = make_synthetic_head(lm, 17);
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 p = testing::random_vec3(rng);
    const FieldSample sa = a.query(p, Vec3(0, 0, -1));
    const FieldSample sb = b.query(p, Vec3(0, 0, -1));
    ASSERT_EQ(sa.density, sb.density);
    ASSERT_EQ(sa.rgb, sb.rgb);
  }
}

TEST(SyntheticHead, RejectsOutOfBoundsLandmarks) {
  Landmarks68::Matrix m = neutral_template().matrix();
  m(0, 5) = 1.5;
  EXPECT_THROW(make_synthetic_head(Landmarks68(m), 1), InvalidArgument);
}

TEST(SyntheticHead, OccupancyInSanityBand) {
  const SyntheticHeadField head = make_synthetic_head(neutral_template(), 1);
  Rng rng(7);
  int occupied = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    if (head.density(testing::random_vec3(rng)) > 20.0) ++occupied;
  }
  const double fraction = static_cast<double>(occupied) / n;
  EXPECT_GT(fraction, 0.01);
  EXPECT_LT(fraction, 0.5);
}

TEST(SyntheticHead, MarkerColoursDecode) {
  for (int i = 0; i < kNumLandmarks; ++i) {
    EXPECT_EQ(decode_marker(marker_color(i)), i);
  }
  const SyntheticHeadField head = make_synthetic_head(neutral_template(), 1);
  for (int i = 0; i < kNumLandmarks; ++i) {
    const Vec3 rgb = head.query(neutral_template().point(i), Vec3(0, 0, -1)).rgb;
    EXPECT_EQ(decode_marker(rgb), i);
  }
  EXPECT_FALSE(decode_marker(
      head.query(head.head_center() + Vec3(0, 0, -0.5), Vec3(0, 0, -1)).rgb));
}

TEST(GridFile, RoundTripsThroughFloat) {
  const SphereField sphere(Vec3::Zero(), 0.5, 40.0, Vec3(0.25, 0.5, 0.75));
  const VoxelGridField g =
      bake_to_grid(sphere, GridBox{Vec3(-1, -2, -3), Vec3(2, 4, 6)}, {5, 6, 7});
  const auto path =
      std::filesystem::temp_directory_path() / "lmfield_grid_roundtrip.flnv";
  save_voxel_grid(g, path);
  const VoxelGridField back = load_voxel_grid(path);
  EXPECT_EQ(back.dims(), g.dims());
  EXPECT_EQ(back.box().origin, g.box().origin);
  EXPECT_EQ(back.data(), g.data());  // values chosen to be float-exact
  save_voxel_grid(back, path);
  EXPECT_EQ(load_voxel_grid(path).data(), back.data());
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace lmfield
