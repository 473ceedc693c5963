#include "cadsynth/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cadsynth/error.hpp"

namespace cadsynth {
namespace {

constexpr int kLayoutAttempts = 8;
constexpr int kTargetPlacementTries = 50;
constexpr double kTargetOverlapLimit = 0.5;
constexpr double kSeparationMargin = 1e-9;

double deg2rad(double d) { return d * kPi / 180.0; }

double clamp_center(double c, double half, double table_center, double table_half) {
  if (half >= table_half) return table_center;
  return std::clamp(c, table_center - table_half + half, table_center + table_half - half);
}

void clamp_to_table(Footprint& f, const TableSpec& table) {
  f.center.x = clamp_center(f.center.x, f.half.x, table.center.x, table.width / 2);
  f.center.y = clamp_center(f.center.y, f.half.y, table.center.y, table.depth / 2);
}

// Pushes a and b apart along the axis of least penetration, half each.
void separate(Footprint& a, Footprint& b, int ia, int ib) {
  const double dx = b.center.x - a.center.x, dy = b.center.y - a.center.y;
  const double px = a.half.x + b.half.x - std::abs(dx);
  const double py = a.half.y + b.half.y - std::abs(dy);
  auto direction = [&](double d) { return d != 0 ? (d > 0 ? 1.0 : -1.0) : (ia < ib ? 1.0 : -1.0); };
  if (px <= py) {
    const double s = direction(dx) * (px + kSeparationMargin) / 2;
    a.center.x -= s;
    b.center.x += s;
  } else {
    const double s = direction(dy) * (py + kSeparationMargin) / 2;
    a.center.y -= s;
    b.center.y += s;
  }
}

bool needs_separation(double fraction, double threshold) { return fraction > 0 && fraction <= threshold; }

Rgb random_color(Rng& rng) { return {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)}; }

int pool_pick(Rng& rng, int configured, std::size_t available, const char* pool) {
  const int n = std::min<int>(configured, static_cast<int>(available));
  if (n < 1) throw AssetMissing(fmt::format("the {} texture pool is empty", pool));
  return static_cast<int>(rng.uniform_int(0, n - 1));
}

SceneSpec layout(const GenConfig& config, const AssetLibrary& assets, int scene_index, int attempt) {
  Rng root = Rng::stream(config.seed, {static_cast<std::uint64_t>(scene_index), static_cast<std::uint64_t>(attempt)},
                         "layout");
  Rng tex_rng = root.split("textures");
  Rng distractor_rng = root.split("distractors");
  Rng settle_rng = root.split("settle");
  Rng target_rng = root.split("target");
  Rng light_rng = root.split("lights");

  SceneSpec scene;
  scene.seed = config.seed;
  scene.scene_index = scene_index;
  scene.resolution = config.resolution;
  scene.shadow_samples = config.shadow_samples;
  scene.floor.half_size = config.floor_half_size;
  scene.floor.texture = {TextureRef::Pool::floor,
                         pool_pick(tex_rng, config.n_floor_textures, assets.floor_textures.size(), "floor")};
  TableSpec table;
  table.width = config.table_width;
  table.depth = config.table_depth;
  table.height = config.table_height;
  table.texture = {TextureRef::Pool::support,
                   pool_pick(tex_rng, config.n_support_textures, assets.support_textures.size(), "support")};
  scene.table = table;

  std::vector<Instance> distractors;
  std::vector<DropItem> items;
  if (config.n_distractors > 0 && assets.distractors.empty()) throw AssetMissing("no distractor meshes in the asset library");
  for (int k = 0; k < config.n_distractors; ++k) {
    Instance inst;
    const int mesh_index = static_cast<int>(distractor_rng.uniform_int(0, static_cast<std::int64_t>(assets.distractors.size()) - 1));
    inst.asset = AssetId::distractor(mesh_index);
    inst.scale = distractor_rng.uniform(config.distractor_scale.min, config.distractor_scale.max);
    inst.color = random_color(distractor_rng);
    const Mesh& mesh = assets.distractors[mesh_index].mesh;
    if (mesh.has_uvs())
      inst.texture = TextureRef{TextureRef::Pool::distractor,
                                pool_pick(distractor_rng, config.n_distractor_textures,
                                          assets.distractor_textures.size(), "distractor")};
    DropItem item;
    item.local_bounds = mesh_bounds(mesh).scaled(inst.scale);
    item.position = {distractor_rng.uniform(-table.width / 2, table.width / 2) + table.center.x,
                     distractor_rng.uniform(-table.depth / 2, table.depth / 2) + table.center.y};
    item.drop_height = distractor_rng.uniform(config.drop_height.min, config.drop_height.max);
    distractors.push_back(inst);
    items.push_back(item);
  }
  const std::vector<Pose> poses = settle_drop(items, table, settle_rng);
  std::vector<Footprint> footprints;
  for (std::size_t k = 0; k < distractors.size(); ++k) {
    distractors[k].pose = poses[k];
    footprints.push_back(footprint_of(items[k].local_bounds.rotated(poses[k].rotation).translated(poses[k].translation)));
  }

  Instance target;
  target.asset = AssetId::target();
  target.scale = config.target_scale;
  target.color = assets.target.material.base_color;
  if (assets.target.material.texture) target.texture = TextureRef{TextureRef::Pool::target, 0};
  const Aabb3 target_local = mesh_bounds(assets.target.mesh).scaled(config.target_scale);
  bool placed = false;
  for (int tries = 0; tries < kTargetPlacementTries && !placed; ++tries) {
    const Quat q = Quat::yaw(target_rng.uniform(0, 2 * kPi));
    const Aabb3 rb = target_local.rotated(q);
    Footprint f{{0, 0}, {rb.extent().x / 2, rb.extent().y / 2}};
    const double hx = table.width / 2 - f.half.x, hy = table.depth / 2 - f.half.y;
    f.center = {table.center.x + (hx > 0 ? target_rng.uniform(-hx, hx) : 0.0),
                table.center.y + (hy > 0 ? target_rng.uniform(-hy, hy) : 0.0)};
    const bool blocked = std::any_of(footprints.begin(), footprints.end(),
                                     [&](const Footprint& d) { return overlap_fraction(f, d) > kTargetOverlapLimit; });
    if (blocked) continue;
    const Vec3 c = rb.center();
    target.pose = {q, {f.center.x - c.x, f.center.y - c.y, table.top_z() - rb.lo.z}};
    placed = true;
  }
  if (!placed) throw PlacementFailure(fmt::format("could not place the target in scene {} after {} tries", scene_index,
                                                  kTargetPlacementTries));

  scene.instances.push_back(target);
  scene.instances.insert(scene.instances.end(), distractors.begin(), distractors.end());
  scene.lights = sample_lights(config, table, light_rng);
  return scene;
}

}  // namespace

double overlap_area(const Footprint& a, const Footprint& b) {
  const double ox = std::min(a.center.x + a.half.x, b.center.x + b.half.x) -
                    std::max(a.center.x - a.half.x, b.center.x - b.half.x);
  const double oy = std::min(a.center.y + a.half.y, b.center.y + b.half.y) -
                    std::max(a.center.y - a.half.y, b.center.y - b.half.y);
  return ox > 0 && oy > 0 ? ox * oy : 0.0;
}

double overlap_fraction(const Footprint& a, const Footprint& b) {
  const double smaller = std::min(a.area(), b.area());
  if (!(smaller > 0)) return 0.0;
  return overlap_area(a, b) / smaller;
}

Footprint footprint_of(const Aabb3& b) {
  return {{(b.lo.x + b.hi.x) / 2, (b.lo.y + b.hi.y) / 2}, {(b.hi.x - b.lo.x) / 2, (b.hi.y - b.lo.y) / 2}};
}

std::vector<Pose> settle_drop(std::span<const DropItem> items, const TableSpec& table, Rng& rng,
                              const SettleParams& params) {
  const int n = static_cast<int>(items.size());
  std::vector<Quat> rotations(n);
  std::vector<Aabb3> rotated(n);
  std::vector<Footprint> fp(n);
  for (int i = 0; i < n; ++i) {
    rotations[i] = Quat::yaw(rng.uniform(0, 2 * kPi));
    rotated[i] = items[i].local_bounds.rotated(rotations[i]);
    fp[i] = {items[i].position, {rotated[i].extent().x / 2, rotated[i].extent().y / 2}};
    clamp_to_table(fp[i], table);
  }

  bool clear = false;
  for (int iter = 0; iter < params.max_iterations && !clear; ++iter) {
    clear = true;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (!needs_separation(overlap_fraction(fp[i], fp[j]), params.stack_threshold)) continue;
        clear = false;
        separate(fp[i], fp[j], i, j);
        clamp_to_table(fp[i], table);
        clamp_to_table(fp[j], table);
      }
  }
  if (!clear)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (needs_separation(overlap_fraction(fp[i], fp[j]), params.stack_threshold))
          throw PlacementFailure(fmt::format("distractors {} and {} still overlap after {} separation iterations", i, j,
                                             params.max_iterations));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return items[a].drop_height < items[b].drop_height; });
  std::vector<Pose> poses(n);
  std::vector<double> tops(n, 0.0);
  std::vector<int> landed;
  for (int i : order) {
    double base = table.top_z();
    for (int j : landed)
      if (overlap_area(fp[i], fp[j]) > 0) base = std::max(base, tops[j]);
    const Vec3 c = rotated[i].center();
    poses[i] = {rotations[i], {fp[i].center.x - c.x, fp[i].center.y - c.y, base - rotated[i].lo.z}};
    tops[i] = base + rotated[i].extent().z;
    landed.push_back(i);
  }
  return poses;
}

std::vector<Light> sample_lights(const GenConfig& config, const TableSpec& table, Rng& rng) {
  const int count = static_cast<int>(rng.uniform_int(config.light_count.min, config.light_count.max));
  std::vector<Light> lights;
  for (int i = 0; i < count; ++i) {
    Light l;
    const double angle = rng.uniform(0, 2 * kPi);
    const double r = config.light_spread * std::sqrt(rng.uniform());
    const double h = rng.uniform(config.light_height.min, config.light_height.max);
    l.position = {table.center.x + r * std::cos(angle), table.center.y + r * std::sin(angle), table.top_z() + h};
    const double s = rng.uniform(config.light_intensity.min, config.light_intensity.max);
    l.intensity = {s, s, s};
    l.radius = rng.uniform(0, config.light_radius_max);
    lights.push_back(l);
  }
  return lights;
}

Intrinsics make_intrinsics(const GenConfig& config) {
  Intrinsics k;
  k.width = config.resolution.width;
  k.height = config.resolution.height;
  k.focal = (k.width / 2.0) / std::tan(deg2rad(config.fov_deg) / 2);
  k.cx = k.width / 2.0;
  k.cy = k.height / 2.0;
  return k;
}

bool in_central_window(const Vec2& p, const Intrinsics& k) {
  return p.x >= 0.1 * k.width && p.x <= 0.9 * k.width && p.y >= 0.1 * k.height && p.y <= 0.9 * k.height;
}

CameraPose sample_camera(const SceneSpec& scene, const SceneGeometry& geometry, const GenConfig& config, Rng& rng) {
  if (scene.instances.empty()) throw InvalidScene("scene has no target");
  const Intrinsics k = make_intrinsics(config);
  const Vec3 center = geometry.target_center();
  const double radius = std::max(geometry.target_radius(), 1e-6);
  double best_fraction = 0;
  for (int attempt = 0; attempt < config.max_camera_attempts; ++attempt) {
    const double distance = rng.uniform(config.camera_distance.min, config.camera_distance.max) * radius;
    const double elevation = deg2rad(rng.uniform(config.camera_elevation_deg.min, config.camera_elevation_deg.max));
    const double azimuth = rng.uniform(0, 2 * kPi);
    const double j = config.look_jitter * radius;
    const Vec3 look = center + Vec3{rng.uniform(-j, j), rng.uniform(-j, j), rng.uniform(-j, j)};
    const Vec3 eye = look + Vec3{std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                                 std::sin(elevation)} * distance;
    const CameraPose cam = CameraPose::look_at(eye, look, k);
    const auto projected = project(center, cam);
    if (!projected || !in_central_window(*projected, k)) continue;
    const double fraction = visible_fraction(geometry, cam, kProbeDownscale);
    best_fraction = std::max(best_fraction, fraction);
    if (fraction >= config.visibility_min) return cam;
  }
  throw CameraConstraintFailure(fmt::format(
      "no camera for scene {} met the visibility constraint in {} attempts (best visible fraction {:.3f}, need {:.3f})",
      scene.scene_index, config.max_camera_attempts, best_fraction, config.visibility_min));
}

SceneSpec sample_scene(const GenConfig& config, const AssetLibrary& assets, int scene_index) {
  validate(config);
  if (scene_index < 0) throw ConfigError("scene_index must be >= 0");
  for (int attempt = 0;; ++attempt) {
    try {
      return layout(config, assets, scene_index, attempt);
    } catch (const PlacementFailure&) {
      if (attempt + 1 >= kLayoutAttempts) throw;
    }
  }
}

Rng camera_stream(const GenConfig& config, int scene_index, int camera_index) {
  return Rng::stream(config.seed, {static_cast<std::uint64_t>(scene_index), static_cast<std::uint64_t>(camera_index)},
                     "camera");
}

}  // namespace cadsynth
