#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "cadsynth/assets.hpp"
#include "cadsynth/config.hpp"
#include "cadsynth/geometry.hpp"

namespace cadsynth {

struct Pose {
  Quat rotation;
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
  bool operator==(const Pose&) const = default;
};

// Pinhole intrinsics in pixels. The camera frame is x right, y down, z forward.
struct Intrinsics {
  double focal = 500;
  double cx = 320;
  double cy = 240;
  int width = 640;
  int height = 480;

  Intrinsics scaled(int factor) const;
  bool operator==(const Intrinsics&) const = default;
};

// pose maps camera-frame points to world points.
struct CameraPose {
  Pose pose;
  Intrinsics intrinsics;

  static CameraPose look_at(const Vec3& eye, const Vec3& target, const Intrinsics& intrinsics);
  bool operator==(const CameraPose&) const = default;
};

struct Light {
  Vec3 position;
  Rgb intensity{1, 1, 1};
  double radius = 0;  // 0 = point light

  bool operator==(const Light&) const = default;
};

// Ground plane with its top face at z = 0.
struct FloorSpec {
  double half_size = 6.0;
  TextureRef texture{TextureRef::Pool::floor, 0};

  bool operator==(const FloorSpec&) const = default;
};

// Table: a slab whose top face is at z = height, on four legs.
struct TableSpec {
  Vec2 center{0, 0};
  double width = 1.6;
  double depth = 1.0;
  double height = 0.75;
  double top_thickness = 0.04;
  double leg_size = 0.06;
  TextureRef texture{TextureRef::Pool::support, 0};

  double top_z() const { return height; }
  bool operator==(const TableSpec&) const = default;
};

struct Instance {
  AssetId asset;
  Pose pose;
  double scale = 1.0;
  Rgb color{0.8, 0.8, 0.8};
  std::optional<TextureRef> texture;

  bool operator==(const Instance&) const = default;
};

// A fully determined scene. instances[0], when present, is the target; its mask id is 1 and
// instance i has mask id i + 1. Floor and table are background (id 0).
struct SceneSpec {
  std::uint64_t seed = 0;
  int scene_index = 0;
  int camera_index = 0;
  Resolution resolution;
  FloorSpec floor;
  std::optional<TableSpec> table;  // absent for floor-only scenes
  std::vector<Instance> instances;
  std::vector<Light> lights;
  std::optional<CameraPose> camera;
  int shadow_samples = 1;

  bool operator==(const SceneSpec&) const = default;
};

inline constexpr int kTargetMaskId = 1;

// World-space bounds of an instance's mesh.
Aabb3 instance_bounds(const Instance& instance, const AssetLibrary& assets);

// Throws InvalidScene when the SceneSpec invariants do not hold.
void validate_scene(const SceneSpec& scene);

nlohmann::json to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const nlohmann::json& j);  // throws InvalidScene

}  // namespace cadsynth
