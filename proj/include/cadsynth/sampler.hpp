#pragma once

#include <span>
#include <vector>

#include "cadsynth/assets.hpp"
#include "cadsynth/config.hpp"
#include "cadsynth/renderer.hpp"
#include "cadsynth/rng.hpp"
#include "cadsynth/scene.hpp"

namespace cadsynth {

// Axis-aligned footprint rectangle on the table plane.
struct Footprint {
  Vec2 center;
  Vec2 half;

  double area() const { return 4 * half.x * half.y; }
};

double overlap_area(const Footprint& a, const Footprint& b);
// Overlap area relative to the smaller footprint; 0 for degenerate inputs.
double overlap_fraction(const Footprint& a, const Footprint& b);

struct DropItem {
  Aabb3 local_bounds;  // mesh bounds after scaling, before rotation
  Vec2 position;       // sampled horizontal footprint center
  double drop_height = 0;
};

struct SettleParams {
  int max_iterations = 100;
  double stack_threshold = 0.5;
};

// Kinematic stand-in for a physics drop onto the table.
//
// Each item gets a random yaw (one draw per item, in item order) and its
// footprint becomes the rotated bounds' rectangle. Footprints are then
// separated iteratively: every pair overlapping by a fraction in
// (0, stack_threshold] is pushed apart along its axis of least penetration,
// half each, and clamped inside the table top. Pairs overlapping by more than
// stack_threshold are left alone and end up stacked. If interior overlaps
// remain after max_iterations, PlacementFailure is thrown.
//
// Items land in ascending drop height (ties by index); each rests on the
// highest top among already-landed items whose footprint it overlaps, or on
// the table top.
std::vector<Pose> settle_drop(std::span<const DropItem> items, const TableSpec& table, Rng& rng,
                              const SettleParams& params = {});

Footprint footprint_of(const Aabb3& world_bounds);

std::vector<Light> sample_lights(const GenConfig& config, const TableSpec& table, Rng& rng);

Intrinsics make_intrinsics(const GenConfig& config);

// Rejection-samples a look-at camera around the target: distance within
// config.camera_distance (times target radius), elevation within
// config.camera_elevation_deg, look point jittered around the target center.
// Accepts a pose when the projected target center lies in the central 80% of
// the frame and the quarter-resolution visible fraction reaches
// config.visibility_min. Throws CameraConstraintFailure after
// config.max_camera_attempts rejections.
CameraPose sample_camera(const SceneSpec& scene, const SceneGeometry& geometry, const GenConfig& config,
                         Rng& rng);

inline constexpr int kProbeDownscale = 4;

// Whether the projected point lies in the central 80% window.
bool in_central_window(const Vec2& pixel, const Intrinsics& intrinsics);

// Scene without camera. Deterministic in (config.seed, scene_index); the
// layout is retried a few times on streams keyed by attempt before
// PlacementFailure escapes.
SceneSpec sample_scene(const GenConfig& config, const AssetLibrary& assets, int scene_index);

Rng camera_stream(const GenConfig& config, int scene_index, int camera_index);

}  // namespace cadsynth
