#include <gtest/gtest.h>

#include "cadsynth/error.hpp"
#include "cadsynth/primitives.hpp"
#include "cadsynth/sampler.hpp"
#include "support/fixtures.hpp"

namespace cadsynth {
namespace {

constexpr double kEps = 1e-9;

Aabb3 unit_cube() { return {{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}}; }

TableSpec wide_table() {
  TableSpec t;
  t.width = 6;
  t.depth = 6;
  return t;
}

TEST(Footprints, OverlapGeometry) {
  const Footprint a{{0, 0}, {1, 1}}, b{{1, 0}, {1, 1}}, c{{5, 5}, {1, 1}}, small{{0, 0}, {0.5, 0.5}};
  EXPECT_DOUBLE_EQ(overlap_area(a, b), 2.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(a, b), 0.5);
  EXPECT_DOUBLE_EQ(overlap_area(a, c), 0.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(a, small), 1.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(a, Footprint{{0, 0}, {0, 1}}), 0.0);
  const Footprint f = footprint_of({{1, 2, 0}, {3, 6, 1}});
  EXPECT_DOUBLE_EQ(f.center.x, 2);
  EXPECT_DOUBLE_EQ(f.center.y, 4);
  EXPECT_DOUBLE_EQ(f.half.x, 1);
  EXPECT_DOUBLE_EQ(f.half.y, 2);
}

TEST(SettleDrop, ZeroItems) {
  Rng rng(1);
  EXPECT_TRUE(settle_drop({}, wide_table(), rng).empty());
}

TEST(SettleDrop, SingleCubeRestsOnTable) {
  const TableSpec table = wide_table();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const DropItem item{unit_cube(), {0.3 * static_cast<double>(seed % 5) - 0.6, 0.4}, 0.2};
    const auto poses = settle_drop(std::span(&item, 1), table, rng);
    ASSERT_EQ(poses.size(), 1u);
    EXPECT_NEAR(poses[0].translation.z, table.top_z() + 0.5, kEps);
  }
}

TEST(SettleDrop, CoincidentCubesStack) {
  const TableSpec table = wide_table();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const DropItem items[2] = {{unit_cube(), {0.1, -0.2}, 0.1}, {unit_cube(), {0.1, -0.2}, 0.3}};
    const auto poses = settle_drop(items, table, rng);
    EXPECT_NEAR(poses[0].translation.z, table.top_z() + 0.5, kEps);
    EXPECT_NEAR(poses[1].translation.z, table.top_z() + 1.5, kEps);
  }
}

TEST(SettleDrop, SlightOverlapSeparates) {
  const TableSpec table = wide_table();
  Rng rng(3);
  const Aabb3 flat{{-0.5, -0.5, -0.1}, {0.5, 0.5, 0.1}};
  const DropItem items[2] = {{flat, {0.0, 0.0}, 0.1}, {flat, {1.2, 0.0}, 0.3}};
  SettleParams p;
  const auto poses = settle_drop(items, table, rng, p);
  Footprint f[2];
  for (int i = 0; i < 2; ++i) {
    f[i] = footprint_of(flat.rotated(poses[i].rotation).translated(poses[i].translation));
    EXPECT_NEAR(poses[i].translation.z, table.top_z() + 0.1, kEps);
  }
  EXPECT_EQ(overlap_area(f[0], f[1]), 0.0);
}

// Random drops: overlapping footprints exceed the stack threshold and their
// boxes are vertically disjoint; every footprint stays on the table.
TEST(SettleDrop, RandomDropsAreSound) {
  TableSpec table;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng gen = Rng::stream(seed, {}, "items");
    std::vector<DropItem> items;
    const int n = static_cast<int>(gen.uniform_int(1, 25));
    for (int i = 0; i < n; ++i) {
      const Vec3 h{gen.uniform(0.02, 0.1), gen.uniform(0.02, 0.1), gen.uniform(0.02, 0.15)};
      items.push_back({{-h, h}, {gen.uniform(-0.8, 0.8), gen.uniform(-0.5, 0.5)}, gen.uniform(0.05, 0.4)});
    }
    Rng rng(seed);
    std::vector<Pose> poses;
    try {
      poses = settle_drop(items, table, rng);
    } catch (const PlacementFailure&) {
      continue;
    }
    std::vector<Aabb3> world;
    for (int i = 0; i < n; ++i) {
      world.push_back(items[i].local_bounds.rotated(poses[i].rotation).translated(poses[i].translation));
      EXPECT_GE(world[i].lo.z, table.top_z() - kEps);
    }
    for (int i = 0; i < n; ++i) {
      const Footprint fi = footprint_of(world[i]);
      if (2 * fi.half.x < table.width) EXPECT_GE(world[i].lo.x, table.center.x - table.width / 2 - kEps);
      for (int j = i + 1; j < n; ++j) {
        const Footprint fj = footprint_of(world[j]);
        const double frac = overlap_fraction(fi, fj);
        if (frac <= 1e-9) continue;
        EXPECT_GT(frac, 0.5) << "seed " << seed << " pair " << i << "," << j;
        const bool disjoint = world[i].lo.z >= world[j].hi.z - 1e-9 || world[j].lo.z >= world[i].hi.z - 1e-9;
        EXPECT_TRUE(disjoint) << "seed " << seed << " pair " << i << "," << j;
      }
    }
  }
}

TEST(Lights, CountRangeAndDeterminism) {
  GenConfig c;
  TableSpec table;
  c.light_count = {1, 1};
  Rng r1(4);
  EXPECT_EQ(sample_lights(c, table, r1).size(), 1u);
  c = GenConfig{};
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng a(s), b(s);
    const auto la = sample_lights(c, table, a);
    EXPECT_EQ(la, sample_lights(c, table, b));
    EXPECT_GE(la.size(), 1u);
    EXPECT_LE(la.size(), 3u);
    for (const Light& l : la) {
      EXPECT_GE(l.position.z, table.top_z() + c.light_height.min);
      EXPECT_LE(l.position.z, table.top_z() + c.light_height.max);
      EXPECT_GE(l.intensity.x, c.light_intensity.min);
      EXPECT_LE(l.radius, c.light_radius_max);
    }
  }
}

TEST(SampleScene, InstanceCounts) {
  GenConfig c;
  c.n_distractors = 0;
  const SceneSpec empty = sample_scene(c, testing::demo_library(), 0);
  ASSERT_EQ(empty.instances.size(), 1u);
  EXPECT_EQ(empty.instances[0].asset, AssetId::target());

  c = GenConfig{};
  const SceneSpec best = sample_scene(c, testing::demo_library(), 0);
  EXPECT_EQ(best.instances.size(), 21u);
  EXPECT_NO_THROW(validate_scene(best));
  EXPECT_FALSE(best.camera.has_value());
}

TEST(SampleScene, DeterministicAndKeyed) {
  GenConfig c;
  c.seed = 7;
  const auto& lib = testing::demo_library();
  const SceneSpec a = sample_scene(c, lib, 3);
  EXPECT_EQ(a, sample_scene(c, lib, 3));
  EXPECT_NE(a, sample_scene(c, lib, 4));
  c.seed = 8;
  EXPECT_NE(a, sample_scene(c, lib, 3));
}

TEST(SampleScene, TargetRestsOnTable) {
  GenConfig c;
  const auto& lib = testing::demo_library();
  for (int s = 0; s < 5; ++s) {
    const SceneSpec scene = sample_scene(c, lib, s);
    const Aabb3 b = instance_bounds(scene.instances[0], lib);
    EXPECT_NEAR(b.lo.z, scene.table->top_z(), 1e-9);
  }
}

TEST(Intrinsics, FromConfig) {
  GenConfig c;
  c.resolution = {640, 480};
  c.fov_deg = 90;
  const Intrinsics k = make_intrinsics(c);
  EXPECT_NEAR(k.focal, 320, 1e-9);
  EXPECT_DOUBLE_EQ(k.cx, 320);
  EXPECT_DOUBLE_EQ(k.cy, 240);
  EXPECT_TRUE(in_central_window({320, 240}, k));
  EXPECT_FALSE(in_central_window({20, 240}, k));
  EXPECT_FALSE(in_central_window({320, 470}, k));
}

TEST(SampleCamera, AcceptedPosesCenterTheTarget) {
  GenConfig c = testing::small_config();
  const auto& lib = testing::demo_library();
  for (int s = 0; s < 4; ++s) {
    SceneSpec scene = sample_scene(c, lib, s);
    const SceneGeometry g = build_geometry(scene, lib);
    for (int k = 0; k < 3; ++k) {
      Rng rng = camera_stream(c, s, k);
      const CameraPose cam = sample_camera(scene, g, c, rng);
      const auto p = project(g.target_center(), cam);
      ASSERT_TRUE(p.has_value());
      EXPECT_TRUE(in_central_window(*p, cam.intrinsics));
      EXPECT_GE(visible_fraction(g, cam, kProbeDownscale), c.visibility_min);
      Rng again = camera_stream(c, s, k);
      EXPECT_EQ(sample_camera(scene, g, c, again), cam);
    }
  }
}

TEST(SampleCamera, WeakestConstraintTakesFirstPose) {
  GenConfig c = testing::small_config();
  c.n_distractors = 0;
  c.visibility_min = 0;
  c.look_jitter = 0;
  const auto& lib = testing::demo_library();
  const SceneSpec scene = sample_scene(c, lib, 0);
  const SceneGeometry g = build_geometry(scene, lib);
  Rng rng(11), reference(11);
  sample_camera(scene, g, c, rng);
  for (int i = 0; i < 6; ++i) reference.next_u64();  // distance, elevation, azimuth, look jitter x3
  EXPECT_EQ(rng.next_u64(), reference.next_u64());
}

TEST(SampleCamera, EnclosedTargetFails) {
  AssetLibrary lib = testing::demo_library();
  const Aabb3 tb = mesh_bounds(lib.target.mesh);
  const double r = length(tb.extent()) / 2;
  lib.distractors = {{"shell", make_box({1.2 * r, 1.2 * r, 1.2 * r})}};

  GenConfig c = testing::small_config();
  c.n_distractors = 0;
  c.camera_distance = {4, 6};
  c.visibility_min = 0.05;
  c.max_camera_attempts = 16;
  SceneSpec scene = sample_scene(c, lib, 0);
  Instance shell;
  shell.asset = AssetId::distractor(0);
  shell.pose.translation = instance_bounds(scene.instances[0], lib).center();
  scene.instances.push_back(shell);
  const SceneGeometry g = build_geometry(scene, lib);

  Rng probe(5);
  for (int i = 0; i < 8; ++i) {
    const double az = probe.uniform(0, 2 * kPi);
    const Vec3 eye = g.target_center() + Vec3{std::cos(az), std::sin(az), 0.8} * (5 * r);
    EXPECT_EQ(visible_fraction(g, CameraPose::look_at(eye, g.target_center(), make_intrinsics(c)), kProbeDownscale), 0.0);
  }
  Rng rng = camera_stream(c, 0, 0);
  EXPECT_THROW(sample_camera(scene, g, c, rng), CameraConstraintFailure);
}

}  // namespace
}  // namespace cadsynth
