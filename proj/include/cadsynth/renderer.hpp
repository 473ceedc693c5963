#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cadsynth/assets.hpp"
#include "cadsynth/bbox.hpp"
#include "cadsynth/bvh.hpp"
#include "cadsynth/image.hpp"
#include "cadsynth/scene.hpp"

namespace cadsynth {

// Per-pixel instance id, row-major, 0 = background.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> ids;

  std::uint16_t at(int x, int y) const { return ids[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Mask&) const = default;
};

struct SurfaceMaterial {
  Vec3f color;  // linear
  const Texture* texture = nullptr;
};

// Shading attributes of one world triangle.
struct PrimInfo {
  std::uint16_t instance_id = 0;
  std::uint16_t material = 0;
  Vec3f n0, n1, n2;
  float uv[3][2]{};
};

// Scene flattened into world-space triangles, plus a target-only structure
// for visibility probing.
struct SceneGeometry {
  Bvh bvh;
  Bvh target_bvh;
  std::vector<PrimInfo> prims;
  std::vector<SurfaceMaterial> materials;
  Aabb3 target_bounds;

  Vec3 target_center() const { return target_bounds.center(); }
  double target_radius() const { return length(target_bounds.extent()) * 0.5; }
};

// Throws AssetMissing for unresolvable asset or texture references.
SceneGeometry build_geometry(const SceneSpec& scene, const AssetLibrary& assets);

struct RenderOptions {
  int threads = 0;  // 0 = hardware concurrency
};

// Both throw InvalidScene when the scene has no camera.
Image render(const SceneSpec& scene, const SceneGeometry& geometry, const RenderOptions& options = {});
Image render(const SceneSpec& scene, const AssetLibrary& assets, const RenderOptions& options = {});

Mask render_mask(const SceneSpec& scene, const SceneGeometry& geometry, const RenderOptions& options = {});
Mask render_mask(const SceneSpec& scene, const AssetLibrary& assets, const RenderOptions& options = {});

struct Frame {
  Image image;
  Mask mask;
};

// Image and mask from one primary-ray pass; equal to render + render_mask.
Frame render_frame(const SceneSpec& scene, const SceneGeometry& geometry, const RenderOptions& options = {});

// Tight box over the target's pixels; none below min_pixels.
std::optional<BBox> mask_to_bbox(const Mask& mask, int target_id = kTargetMaskId, int min_pixels = 16);

std::optional<Vec2> project_camera_frame(const Vec3& point, const Intrinsics& intrinsics);
std::optional<Vec2> project(const Vec3& world_point, const CameraPose& camera);

// Primary ray through pixel coordinates (px, py); pixel (x, y) has its center
// at (x + 0.5, y + 0.5).
Ray camera_ray(const CameraPose& camera, double px, double py);

// Fraction of the target's unoccluded silhouette that is visible, sampled on
// a grid downscaled by `downscale`. 0 when the target is out of view.
double visible_fraction(const SceneGeometry& geometry, const CameraPose& camera, int downscale);

// id -> gray for debug mask PNGs.
std::vector<std::uint8_t> mask_to_gray(const Mask& mask);

}  // namespace cadsynth
