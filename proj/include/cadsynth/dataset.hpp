#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cadsynth/assets.hpp"
#include "cadsynth/config.hpp"
#include "cadsynth/image.hpp"
#include "cadsynth/renderer.hpp"
#include "cadsynth/voc.hpp"

namespace cadsynth {

inline constexpr const char* kGeneratorVersion = "cadsynth 0.3.0";

struct FrameRecord {
  int frame_index = 0;
  std::string image;       // relative to dataset root
  std::string annotation;  // relative to dataset root
  std::string mask;        // empty when masks are not written
  std::string scene;       // empty when scenes are not written
  int scene_index = 0;
  int camera_index = 0;
  double visible_fraction = 0;

  bool operator==(const FrameRecord&) const = default;
};

struct Rejection {
  int scene_index = 0;
  int camera_index = 0;  // -1 when the whole scene was rejected
  std::string reason;

  bool operator==(const Rejection&) const = default;
};

struct DatasetManifest {
  std::string generator = kGeneratorVersion;
  GenConfig config;
  std::vector<FrameRecord> frames;
  std::vector<Rejection> rejected;
  double generation_time_s = 0;
};

// img_%06d.png, img_%06d.xml
std::string image_filename(int frame_index);
std::string annotation_filename(int frame_index);

// manifest.json holds everything except the wall-clock time, which lives in
// timing.json next to it so that manifests of identical runs are identical.
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);
DatasetManifest read_manifest(const std::filesystem::path& dataset_dir);  // throws IoFailure / DataError

struct Sample {
  Image image;
  Mask mask;
  Annotation annotation;
  int scene_index = 0;
  int camera_index = 0;
  double visible_fraction = 0;
};

// Single-owner writer for one dataset directory.
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path out_dir, GenConfig config);

  // Writes image, annotation (filename field rewritten to the layout name),
  // optional mask and scene JSON.
  void add(int frame_index, const Sample& sample, const SceneSpec* scene = nullptr);
  void reject(int scene_index, int camera_index, std::string reason);
  DatasetManifest finish(double generation_time_s);

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  DatasetManifest manifest_;
};

// Samples are numbered in order. Throws IoFailure.
DatasetManifest write_dataset(const std::vector<Sample>& samples, const GenConfig& config,
                              const std::filesystem::path& out_dir);

struct GenerateOptions {
  std::function<void(int scene_index, int accepted, int rejected)> on_scene;
};

// Sample, render, label and write every (scene, camera) frame. Frame index is
// scene_index * cam_poses + camera_index. Placement, camera and labeling
// failures become rejections.
DatasetManifest generate_dataset(const GenConfig& config, const AssetLibrary& assets,
                                 const std::filesystem::path& out_dir, const GenerateOptions& options = {});

}  // namespace cadsynth
