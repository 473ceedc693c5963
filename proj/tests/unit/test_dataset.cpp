#include <gtest/gtest.h>

#include <set>

#include "cadsynth/dataset.hpp"
#include "cadsynth/error.hpp"
#include "cadsynth/sampler.hpp"
#include "support/fixtures.hpp"

namespace cadsynth {
namespace {

namespace fs = std::filesystem;

std::set<std::string> files_in(const fs::path& dir) {
  std::set<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) out.insert(e.path().filename().string());
  return out;
}

Sample tiny_sample(int value) {
  Sample s;
  s.image = Image(4, 3);
  for (auto& p : s.image.pixels) p = static_cast<std::uint8_t>(value);
  s.annotation = {"ignored.png", 4, 3, 3, {{"target", {0, 0, 2, 2}, false}}};
  return s;
}

TEST(DatasetLayout, Filenames) {
  EXPECT_EQ(image_filename(7), "img_000007.png");
  EXPECT_EQ(annotation_filename(7), "img_000007.xml");
  EXPECT_EQ(image_filename(123456), "img_123456.png");
}

TEST(WriteDataset, TwoSamples) {
  testing::TempDir dir("ds2");
  const DatasetManifest m = write_dataset({tiny_sample(10), tiny_sample(20)}, GenConfig{}, dir.path());
  EXPECT_EQ(files_in(dir / "images"), (std::set<std::string>{"img_000000.png", "img_000001.png"}));
  EXPECT_EQ(files_in(dir / "annotations"), (std::set<std::string>{"img_000000.xml", "img_000001.xml"}));
  ASSERT_EQ(m.frames.size(), 2u);
  const DatasetManifest back = read_manifest(dir.path());
  ASSERT_EQ(back.frames.size(), 2u);
  EXPECT_EQ(back.frames, m.frames);
  EXPECT_EQ(back.config, m.config);
  const Annotation a = parse_voc_xml(read_text_file(dir / back.frames[1].annotation));
  EXPECT_EQ(a.filename, "img_000001.png");
  EXPECT_EQ(decode_png(read_file(dir / back.frames[1].image)).pixels[0], 20);
}

TEST(WriteDataset, ZeroSamples) {
  testing::TempDir dir("ds0");
  const DatasetManifest m = write_dataset({}, GenConfig{}, dir.path());
  EXPECT_TRUE(m.frames.empty());
  EXPECT_TRUE(files_in(dir / "images").empty());
  EXPECT_TRUE(read_manifest(dir.path()).frames.empty());
}

TEST(WriteDataset, StaleOutputsAreRemoved) {
  testing::TempDir dir("dsstale");
  write_dataset({tiny_sample(1), tiny_sample(2), tiny_sample(3)}, GenConfig{}, dir.path());
  write_dataset({tiny_sample(4)}, GenConfig{}, dir.path());
  EXPECT_EQ(files_in(dir / "images").size(), 1u);
  EXPECT_EQ(files_in(dir / "annotations").size(), 1u);
}

TEST(Manifest, JsonRoundTripAndCorruption) {
  DatasetManifest m;
  m.frames = {{3, "images/img_000003.png", "annotations/img_000003.xml", "", "scenes/img_000003.json", 0, 3, 0.5}};
  m.rejected = {{1, -1, "placement: x"}, {2, 4, "camera: y"}};
  const DatasetManifest back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(back.frames, m.frames);
  EXPECT_EQ(back.rejected, m.rejected);
  EXPECT_FALSE(manifest_to_json(m).contains("generation_time_s"));

  testing::TempDir dir("dscorrupt");
  EXPECT_THROW(read_manifest(dir.path()), DataError);
  write_file(dir / "manifest.json", std::string_view("{\"frames\": [1,"));
  EXPECT_THROW(read_manifest(dir.path()), DataError);
  write_file(dir / "manifest.json", std::string_view("{\"frames\": 3}"));
  EXPECT_THROW(read_manifest(dir.path()), DataError);
}

TEST(GenerateDataset, CompleteAndConsistent) {
  testing::TempDir dir("gen");
  GenConfig c = testing::small_config();
  c.write_masks = true;
  const auto& lib = testing::demo_library();
  int callbacks = 0;
  GenerateOptions opts;
  opts.on_scene = [&](int, int, int) { ++callbacks; };
  const DatasetManifest m = generate_dataset(c, lib, dir.path(), opts);
  EXPECT_EQ(callbacks, c.n_scenes);
  EXPECT_EQ(static_cast<int>(m.frames.size() + m.rejected.size()), c.n_images());
  EXPECT_GT(m.generation_time_s, 0.0);
  EXPECT_GT(read_manifest(dir.path()).generation_time_s, 0.0);

  for (const FrameRecord& f : m.frames) {
    EXPECT_EQ(f.frame_index, f.scene_index * c.cam_poses + f.camera_index);
    ASSERT_TRUE(fs::exists(dir / f.image));
    ASSERT_TRUE(fs::exists(dir / f.mask));
    ASSERT_TRUE(fs::exists(dir / f.scene));
    const Annotation a = parse_voc_xml(read_text_file(dir / f.annotation));
    EXPECT_EQ(a.filename, image_filename(f.frame_index));
    EXPECT_EQ(a.width, c.resolution.width);
    ASSERT_EQ(a.objects.size(), 1u);
    EXPECT_EQ(a.objects[0].name, c.class_name);

    // The label is the tight box of the re-rendered target mask.
    const SceneSpec scene = scene_from_json(nlohmann::json::parse(read_text_file(dir / f.scene)));
    const Mask mask = render_mask(scene, lib, {1});
    EXPECT_EQ(mask_to_bbox(mask, kTargetMaskId, c.min_pixels), a.objects[0].box);
    const RgbImage gray = decode_png(read_file(dir / f.mask));
    EXPECT_EQ(gray.width, c.resolution.width);
  }
  EXPECT_EQ(files_in(dir / "images").size(), m.frames.size());
}

TEST(GenerateDataset, SmallTargetsAreRejectedWithReason) {
  testing::TempDir dir("genrej");
  GenConfig c = testing::small_config(32, 24);
  c.n_scenes = 1;
  c.min_pixels = 32 * 24 + 1;
  const DatasetManifest m = generate_dataset(c, testing::demo_library(), dir.path());
  EXPECT_TRUE(m.frames.empty());
  ASSERT_EQ(static_cast<int>(m.rejected.size()), c.cam_poses);
  for (const Rejection& r : m.rejected) EXPECT_EQ(r.reason.rfind("label:", 0), 0u) << r.reason;
}

TEST(GenerateDataset, ZeroScenes) {
  testing::TempDir dir("gen0");
  GenConfig c = testing::small_config();
  c.n_scenes = 0;
  const DatasetManifest m = generate_dataset(c, testing::demo_library(), dir.path());
  EXPECT_TRUE(m.frames.empty());
  EXPECT_TRUE(m.rejected.empty());
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(GenerateDataset, ScenesDoNotDependOnSceneCount) {
  testing::TempDir a("gen_a"), b("gen_b");
  GenConfig c = testing::small_config(48, 36);
  c.n_scenes = 1;
  generate_dataset(c, testing::demo_library(), a.path());
  c.n_scenes = 2;
  generate_dataset(c, testing::demo_library(), b.path());
  for (const std::string& f : files_in(a / "annotations"))
    EXPECT_EQ(read_text_file(a / "annotations" / f), read_text_file(b / "annotations" / f));
  for (const std::string& f : files_in(a / "images")) EXPECT_EQ(read_file(a / "images" / f), read_file(b / "images" / f));
}

}  // namespace
}  // namespace cadsynth
