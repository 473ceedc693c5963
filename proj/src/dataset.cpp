#include "cadsynth/dataset.hpp"

#include <chrono>

#include <fmt/format.h>

#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"
#include "cadsynth/sampler.hpp"
#include "cadsynth/scene.hpp"

namespace cadsynth {

namespace fs = std::filesystem;
using nlohmann::json;

std::string image_filename(int frame_index) { return fmt::format("img_{:06d}.png", frame_index); }
std::string annotation_filename(int frame_index) { return fmt::format("img_{:06d}.xml", frame_index); }

namespace {

std::string stem_of(int frame_index) { return fmt::format("img_{:06d}", frame_index); }

template <typename T>
T field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(fmt::format("manifest entry lacks '{}'", key));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(fmt::format("manifest field '{}' has the wrong type", key));
  }
}

}  // namespace

json manifest_to_json(const DatasetManifest& m) {
  json frames = json::array();
  for (const FrameRecord& f : m.frames) {
    json e = {{"frame_index", f.frame_index}, {"image", f.image},           {"annotation", f.annotation},
              {"scene_index", f.scene_index}, {"camera_index", f.camera_index}, {"visible_fraction", f.visible_fraction}};
    if (!f.mask.empty()) e["mask"] = f.mask;
    if (!f.scene.empty()) e["scene"] = f.scene;
    frames.push_back(std::move(e));
  }
  json rejected = json::array();
  for (const Rejection& r : m.rejected)
    rejected.push_back({{"scene_index", r.scene_index}, {"camera_index", r.camera_index}, {"reason", r.reason}});
  return {{"generator", m.generator},
          {"config", to_json(m.config)},
          {"n_frames", m.frames.size()},
          {"frames", frames},
          {"rejected", rejected}};
}

DatasetManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw DataError("manifest must be a JSON object");
  DatasetManifest m;
  m.generator = field<std::string>(j, "generator");
  m.config = gen_config_from_json(field<json>(j, "config"));
  for (const json& e : field<json>(j, "frames")) {
    FrameRecord f;
    f.frame_index = field<int>(e, "frame_index");
    f.image = field<std::string>(e, "image");
    f.annotation = field<std::string>(e, "annotation");
    f.scene_index = field<int>(e, "scene_index");
    f.camera_index = field<int>(e, "camera_index");
    f.visible_fraction = field<double>(e, "visible_fraction");
    if (e.contains("mask")) f.mask = field<std::string>(e, "mask");
    if (e.contains("scene")) f.scene = field<std::string>(e, "scene");
    m.frames.push_back(std::move(f));
  }
  for (const json& e : field<json>(j, "rejected"))
    m.rejected.push_back({field<int>(e, "scene_index"), field<int>(e, "camera_index"), field<std::string>(e, "reason")});
  return m;
}

DatasetManifest read_manifest(const fs::path& dataset_dir) {
  const fs::path path = dataset_dir / "manifest.json";
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{}: invalid JSON at line {}", path.string(), line_of_offset(text, e.byte)));
  }
  DatasetManifest m = manifest_from_json(j);
  std::error_code ec;
  if (fs::exists(dataset_dir / "timing.json", ec)) {
    try {
      m.generation_time_s = json::parse(read_text_file(dataset_dir / "timing.json")).value("generation_time_s", 0.0);
    } catch (const json::exception&) {
      throw DataError("timing.json is not valid JSON");
    }
  }
  return m;
}

DatasetWriter::DatasetWriter(fs::path out_dir, GenConfig config) : root_(std::move(out_dir)) {
  manifest_.config = std::move(config);
  std::error_code ec;
  // Stale outputs from an earlier run would break manifest completeness.
  for (const char* sub : {"images", "annotations", "masks", "scenes"}) fs::remove_all(root_ / sub, ec);
  fs::remove(root_ / "manifest.json", ec);
  fs::remove(root_ / "timing.json", ec);
  for (const char* sub : {"images", "annotations"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) throw IoFailure(fmt::format("cannot create {}: {}", (root_ / sub).string(), ec.message()));
  }
}

void DatasetWriter::add(int frame_index, const Sample& sample, const SceneSpec* scene) {
  FrameRecord f;
  f.frame_index = frame_index;
  f.image = "images/" + image_filename(frame_index);
  f.annotation = "annotations/" + annotation_filename(frame_index);
  f.scene_index = sample.scene_index;
  f.camera_index = sample.camera_index;
  f.visible_fraction = sample.visible_fraction;
  write_file(root_ / f.image, ByteView(encode_png(sample.image)));
  Annotation ann = sample.annotation;
  ann.filename = image_filename(frame_index);
  write_file(root_ / f.annotation, write_voc_xml(ann));
  if (manifest_.config.write_masks && !sample.mask.ids.empty()) {
    f.mask = "masks/" + image_filename(frame_index);
    write_file(root_ / f.mask, ByteView(encode_png_gray(sample.mask.width, sample.mask.height, mask_to_gray(sample.mask))));
  }
  if (manifest_.config.write_scenes && scene) {
    f.scene = "scenes/" + stem_of(frame_index) + ".json";
    write_file(root_ / f.scene, to_json(*scene).dump(1));
  }
  manifest_.frames.push_back(std::move(f));
}

void DatasetWriter::reject(int scene_index, int camera_index, std::string reason) {
  manifest_.rejected.push_back({scene_index, camera_index, std::move(reason)});
}

DatasetManifest DatasetWriter::finish(double generation_time_s) {
  manifest_.generation_time_s = generation_time_s;
  write_file(root_ / "manifest.json", manifest_to_json(manifest_).dump(2) + "\n");
  write_file(root_ / "timing.json", json{{"generation_time_s", generation_time_s}}.dump(2) + "\n");
  return manifest_;
}

DatasetManifest write_dataset(const std::vector<Sample>& samples, const GenConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  DatasetWriter writer(out_dir, config);
  for (std::size_t i = 0; i < samples.size(); ++i) writer.add(static_cast<int>(i), samples[i]);
  return writer.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

DatasetManifest generate_dataset(const GenConfig& config, const AssetLibrary& assets, const fs::path& out_dir,
                                 const GenerateOptions& options) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  DatasetWriter writer(out_dir, config);
  const RenderOptions render_options{config.threads};
  for (int s = 0; s < config.n_scenes; ++s) {
    int accepted = 0, rejected = 0;
    std::optional<SceneSpec> base;
    try {
      base = sample_scene(config, assets, s);
    } catch (const PlacementFailure& e) {
      writer.reject(s, -1, fmt::format("placement: {}", e.what()));
      if (options.on_scene) options.on_scene(s, 0, config.cam_poses);
      continue;
    }
    const SceneGeometry geometry = build_geometry(*base, assets);
    for (int c = 0; c < config.cam_poses; ++c) {
      SceneSpec scene = *base;
      scene.camera_index = c;
      try {
        Rng rng = camera_stream(config, s, c);
        scene.camera = sample_camera(scene, geometry, config, rng);
      } catch (const CameraConstraintFailure& e) {
        writer.reject(s, c, fmt::format("camera: {}", e.what()));
        ++rejected;
        continue;
      }
      Frame frame = render_frame(scene, geometry, render_options);
      const auto box = mask_to_bbox(frame.mask, kTargetMaskId, config.min_pixels);
      if (!box) {
        writer.reject(s, c, fmt::format("label: target covers fewer than {} pixels", config.min_pixels));
        ++rejected;
        continue;
      }
      Sample sample;
      sample.image = std::move(frame.image);
      sample.mask = std::move(frame.mask);
      sample.scene_index = s;
      sample.camera_index = c;
      sample.visible_fraction = visible_fraction(geometry, *scene.camera, kProbeDownscale);
      sample.annotation = {"", config.resolution.width, config.resolution.height, 3, {{config.class_name, *box, false}}};
      writer.add(s * config.cam_poses + c, sample, &scene);
      ++accepted;
    }
    if (options.on_scene) options.on_scene(s, accepted, rejected);
  }
  return writer.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

}  // namespace cadsynth
