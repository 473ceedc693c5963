#include "cadsynth/renderer.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <thread>

#include "cadsynth/error.hpp"
#include "cadsynth/rng.hpp"

namespace cadsynth {
namespace {

constexpr double kBackgroundTile = 0.5;  // meters per texture repeat on floor and table
constexpr float kShadowBias = 1e-4f;

struct GeometryBuilder {
  std::vector<TriangleData> tris;
  std::vector<TriangleData> target_tris;
  std::vector<PrimInfo> prims;

  void add(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& na, const Vec3& nb, const Vec3& nc,
           const std::array<Vec2, 3>& uv, std::uint16_t instance_id, std::uint16_t material) {
    const TriangleData t = TriangleData::from_points(a, b, c);
    tris.push_back(t);
    if (instance_id == kTargetMaskId) target_tris.push_back(t);
    PrimInfo p;
    p.instance_id = instance_id;
    p.material = material;
    p.n0 = na.cast<float>();
    p.n1 = nb.cast<float>();
    p.n2 = nc.cast<float>();
    for (int k = 0; k < 3; ++k) {
      p.uv[k][0] = static_cast<float>(uv[k].x);
      p.uv[k][1] = static_cast<float>(uv[k].y);
    }
    prims.push_back(p);
  }

  // Axis-aligned box with world-planar uvs.
  void add_box(const Vec3& lo, const Vec3& hi, std::uint16_t material) {
    const Vec3 c[8] = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                       {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    struct Face {
      int v[4];
      Vec3 n;
    };
    static constexpr int kFaces[6][4] = {{4, 5, 6, 7}, {0, 3, 2, 1}, {0, 1, 5, 4},
                                         {2, 3, 7, 6}, {1, 2, 6, 5}, {3, 0, 4, 7}};
    const Vec3 normals[6] = {{0, 0, 1}, {0, 0, -1}, {0, -1, 0}, {0, 1, 0}, {1, 0, 0}, {-1, 0, 0}};
    for (int f = 0; f < 6; ++f) {
      const Vec3& n = normals[f];
      auto uv_of = [&](const Vec3& p) {
        if (n.z != 0) return Vec2{p.x / kBackgroundTile, p.y / kBackgroundTile};
        if (n.y != 0) return Vec2{p.x / kBackgroundTile, p.z / kBackgroundTile};
        return Vec2{p.y / kBackgroundTile, p.z / kBackgroundTile};
      };
      const Vec3& a = c[kFaces[f][0]];
      const Vec3& b = c[kFaces[f][1]];
      const Vec3& cc = c[kFaces[f][2]];
      const Vec3& d = c[kFaces[f][3]];
      add(a, b, cc, n, n, n, {uv_of(a), uv_of(b), uv_of(cc)}, 0, material);
      add(a, cc, d, n, n, n, {uv_of(a), uv_of(cc), uv_of(d)}, 0, material);
    }
  }
};

float srgb_to_linear(float c) { return c <= 0.04045f ? c / 12.92f : std::pow((c + 0.055f) / 1.055f, 2.4f); }

const std::array<float, 256>& decode_lut() {
  static const std::array<float, 256> lut = [] {
    std::array<float, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = srgb_to_linear(i / 255.0f);
    return t;
  }();
  return lut;
}

constexpr int kEncodeSteps = 4096;

const std::array<std::uint8_t, kEncodeSteps + 1>& encode_lut() {
  static const std::array<std::uint8_t, kEncodeSteps + 1> lut = [] {
    std::array<std::uint8_t, kEncodeSteps + 1> t{};
    for (int i = 0; i <= kEncodeSteps; ++i) {
      const double c = static_cast<double>(i) / kEncodeSteps;
      const double s = c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
      t[i] = static_cast<std::uint8_t>(std::lround(std::clamp(s, 0.0, 1.0) * 255.0));
    }
    return t;
  }();
  return lut;
}

std::uint8_t encode_channel(float linear) {
  const float c = std::clamp(linear, 0.0f, 1.0f);
  return encode_lut()[static_cast<int>(c * kEncodeSteps + 0.5f)];
}

Vec3f sample_texture(const Texture& tex, float u, float v) {
  const auto& lut = decode_lut();
  // Repeat wrap; v runs bottom to top in texture space.
  float x = (u - std::floor(u)) * tex.width - 0.5f;
  float y = (1.0f - (v - std::floor(v))) * tex.height - 0.5f;
  const float fx = std::floor(x), fy = std::floor(y);
  const float ax = x - fx, ay = y - fy;
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
  const int x0 = wrap(static_cast<int>(fx), tex.width), x1 = wrap(static_cast<int>(fx) + 1, tex.width);
  const int y0 = wrap(static_cast<int>(fy), tex.height), y1 = wrap(static_cast<int>(fy) + 1, tex.height);
  auto texel = [&](int px, int py) {
    const std::uint8_t* p = tex.at(px, py);
    return Vec3f{lut[p[0]], lut[p[1]], lut[p[2]]};
  };
  const Vec3f top = texel(x0, y0) * (1 - ax) + texel(x1, y0) * ax;
  const Vec3f bottom = texel(x0, y1) * (1 - ax) + texel(x1, y1) * ax;
  return top * (1 - ay) + bottom * ay;
}

float hash_unit(std::uint64_t key) { return static_cast<float>(Rng::mix(key) >> 40) * 0x1.0p-24f; }

struct Shader {
  const SceneSpec& scene;
  const SceneGeometry& geo;

  Vec3f shade(const Ray& ray, const Hit& hit, std::uint64_t pixel_key) const {
    if (!hit.valid()) return {};
    const TriangleData& tri = geo.bvh.triangles()[hit.prim];
    const PrimInfo& info = geo.prims[hit.prim];
    const float w = 1.0f - hit.u - hit.v;
    const Vec3f p = ray.origin + ray.dir * hit.t;
    Vec3f ng = normalize(cross(tri.e1, tri.e2));
    if (dot(ng, ray.dir) > 0) ng = -ng;
    Vec3f n = normalize(info.n0 * w + info.n1 * hit.u + info.n2 * hit.v);
    if (dot(n, ng) < 0) n = -n;

    const SurfaceMaterial& mat = geo.materials[info.material];
    Vec3f albedo = mat.color;
    if (mat.texture) {
      const float tu = info.uv[0][0] * w + info.uv[1][0] * hit.u + info.uv[2][0] * hit.v;
      const float tv = info.uv[0][1] * w + info.uv[1][1] * hit.u + info.uv[2][1] * hit.v;
      albedo = mul(albedo, sample_texture(*mat.texture, tu, tv));
    }

    Vec3f irradiance{};
    const Vec3f origin = p + ng * kShadowBias;
    const int samples = scene.shadow_samples;
    for (std::size_t li = 0; li < scene.lights.size(); ++li) {
      const Light& light = scene.lights[li];
      const Vec3f lc = light.position.cast<float>();
      const Vec3f intensity = light.intensity.cast<float>() * (1.0f / samples);
      for (int s = 0; s < samples; ++s) {
        Vec3f lp = lc;
        if (light.radius > 0) {
          // Uniform point in the light's ball.
          const std::uint64_t key = pixel_key * 0x9e3779b97f4a7c15ULL + li * 1024 + s;
          const float z = 2 * hash_unit(key * 3 + 0) - 1;
          const float phi = 2 * static_cast<float>(kPi) * hash_unit(key * 3 + 1);
          const float r = static_cast<float>(light.radius) * std::cbrt(hash_unit(key * 3 + 2));
          const float rxy = std::sqrt(std::max(0.0f, 1 - z * z));
          lp = lc + Vec3f{rxy * std::cos(phi), rxy * std::sin(phi), z} * r;
        }
        Vec3f to_light = lp - p;
        const float dist2 = dot(to_light, to_light);
        if (!(dist2 > 0)) continue;
        const float dist = std::sqrt(dist2);
        to_light = to_light / dist;
        const float cos_theta = dot(n, to_light);
        if (cos_theta <= 0 || dot(ng, to_light) <= 0) continue;
        Ray shadow{origin, to_light, 0.0f, dist - kShadowBias};
        if (geo.bvh.occluded(shadow)) continue;
        irradiance += intensity * (cos_theta / dist2);
      }
    }
    return mul(albedo, irradiance) * static_cast<float>(1.0 / kPi);
  }
};

int thread_count(const RenderOptions& options, int rows) {
  int n = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, std::max(1, rows));
}

// Runs fn(y) for every row. Rows are independent, so the output does not
// depend on the schedule.
template <typename Fn>
void for_each_row(int rows, const RenderOptions& options, Fn&& fn) {
  const int n = thread_count(options, rows);
  if (n == 1) {
    for (int y = 0; y < rows; ++y) fn(y);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  workers.reserve(n);
  for (int i = 0; i < n; ++i)
    workers.emplace_back([&] {
      for (int y = next++; y < rows; y = next++) fn(y);
    });
  for (auto& w : workers) w.join();
}

const CameraPose& require_camera(const SceneSpec& scene) {
  if (!scene.camera) throw InvalidScene("scene has no camera");
  return *scene.camera;
}

}  // namespace

SceneGeometry build_geometry(const SceneSpec& scene, const AssetLibrary& assets) {
  validate_scene(scene);
  GeometryBuilder b;
  SceneGeometry geo;
  auto add_material = [&](Vec3 color, const Texture* tex) {
    geo.materials.push_back({color.cast<float>(), tex});
    return static_cast<std::uint16_t>(geo.materials.size() - 1);
  };

  const std::uint16_t floor_mat = add_material({1, 1, 1}, &assets.texture(scene.floor.texture));
  const double hs = scene.floor.half_size;
  b.add_box({-hs, -hs, -0.1}, {hs, hs, 0.0}, floor_mat);

  if (scene.table) {
    const TableSpec& t = *scene.table;
    const std::uint16_t table_mat = add_material({1, 1, 1}, &assets.texture(t.texture));
    const Vec3 lo{t.center.x - t.width / 2, t.center.y - t.depth / 2, t.height - t.top_thickness};
    const Vec3 hi{t.center.x + t.width / 2, t.center.y + t.depth / 2, t.height};
    b.add_box(lo, hi, table_mat);
    const double l = t.leg_size;
    for (int i = 0; i < 4; ++i) {
      const double x = (i & 1) ? hi.x - l : lo.x;
      const double y = (i & 2) ? hi.y - l : lo.y;
      b.add_box({x, y, 0.0}, {x + l, y + l, lo.z}, table_mat);
    }
  }

  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const Instance& inst = scene.instances[i];
    const Mesh& mesh = assets.mesh(inst.asset);
    const Texture* tex = nullptr;
    if (inst.texture) {
      if (!mesh.has_uvs()) throw InvalidScene("textured instance whose mesh has no uvs: " + inst.asset.to_string());
      tex = &assets.texture(*inst.texture);
    }
    const std::uint16_t mat = add_material(inst.color, tex);
    const auto id = static_cast<std::uint16_t>(i + 1);
    std::vector<Vec3> world(mesh.vertices.size());
    for (std::size_t v = 0; v < world.size(); ++v) world[v] = inst.pose.apply(mesh.vertices[v] * inst.scale);
    std::vector<Vec3> normals(mesh.normals.size());
    for (std::size_t v = 0; v < normals.size(); ++v) normals[v] = inst.pose.rotation.rotate(mesh.normals[v]);
    if (i == 0)
      for (const Vec3& p : world) geo.target_bounds.expand(p);
    for (const Triangle& t : mesh.triangles) {
      std::array<Vec2, 3> uv{};
      if (mesh.has_uvs())
        for (int k = 0; k < 3; ++k) uv[k] = mesh.uvs[t.uv[k]];
      b.add(world[t.v[0]], world[t.v[1]], world[t.v[2]], normals[t.n[0]], normals[t.n[1]], normals[t.n[2]], uv, id, mat);
    }
  }

  geo.bvh = Bvh(std::move(b.tris));
  geo.target_bvh = Bvh(std::move(b.target_tris));
  geo.prims = std::move(b.prims);
  return geo;
}

Frame render_frame(const SceneSpec& scene, const SceneGeometry& geometry, const RenderOptions& options) {
  const CameraPose& cam = require_camera(scene);
  const int w = cam.intrinsics.width, h = cam.intrinsics.height;
  Frame frame{Image(w, h), Mask{w, h, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h, 0)}};
  const Shader shader{scene, geometry};
  for_each_row(h, options, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const Ray ray = camera_ray(cam, x + 0.5, y + 0.5);
      const Hit hit = geometry.bvh.closest(ray);
      const std::size_t index = static_cast<std::size_t>(y) * w + x;
      const Vec3f c = shader.shade(ray, hit, index);
      std::uint8_t* px = frame.image.at(x, y);
      px[0] = encode_channel(c.x);
      px[1] = encode_channel(c.y);
      px[2] = encode_channel(c.z);
      if (hit.valid()) frame.mask.ids[index] = geometry.prims[hit.prim].instance_id;
    }
  });
  return frame;
}

Image render(const SceneSpec& scene, const SceneGeometry& geometry, const RenderOptions& options) {
  return render_frame(scene, geometry, options).image;
}

Image render(const SceneSpec& scene, const AssetLibrary& assets, const RenderOptions& options) {
  require_camera(scene);
  return render(scene, build_geometry(scene, assets), options);
}

Mask render_mask(const SceneSpec& scene, const SceneGeometry& geometry, const RenderOptions& options) {
  const CameraPose& cam = require_camera(scene);
  Mask mask;
  mask.width = cam.intrinsics.width;
  mask.height = cam.intrinsics.height;
  mask.ids.assign(static_cast<std::size_t>(mask.width) * mask.height, 0);
  for_each_row(mask.height, options, [&](int y) {
    for (int x = 0; x < mask.width; ++x) {
      const Hit hit = geometry.bvh.closest(camera_ray(cam, x + 0.5, y + 0.5));
      if (hit.valid()) mask.ids[static_cast<std::size_t>(y) * mask.width + x] = geometry.prims[hit.prim].instance_id;
    }
  });
  return mask;
}

Mask render_mask(const SceneSpec& scene, const AssetLibrary& assets, const RenderOptions& options) {
  require_camera(scene);
  return render_mask(scene, build_geometry(scene, assets), options);
}

std::optional<BBox> mask_to_bbox(const Mask& mask, int target_id, int min_pixels) {
  BBox box{mask.width, mask.height, 0, 0};
  long count = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y) == target_id) {
        ++count;
        box.xmin = std::min(box.xmin, x);
        box.ymin = std::min(box.ymin, y);
        box.xmax = std::max(box.xmax, x + 1);
        box.ymax = std::max(box.ymax, y + 1);
      }
  if (count == 0 || count < min_pixels) return std::nullopt;
  return box;
}

std::optional<Vec2> project_camera_frame(const Vec3& p, const Intrinsics& k) {
  if (!(p.z > 0)) return std::nullopt;
  return Vec2{k.focal * p.x / p.z + k.cx, k.focal * p.y / p.z + k.cy};
}

std::optional<Vec2> project(const Vec3& world_point, const CameraPose& camera) {
  const Vec3 local = camera.pose.rotation.conjugate().rotate(world_point - camera.pose.translation);
  return project_camera_frame(local, camera.intrinsics);
}

Ray camera_ray(const CameraPose& camera, double px, double py) {
  const Intrinsics& k = camera.intrinsics;
  const Vec3 dir_cam{(px - k.cx) / k.focal, (py - k.cy) / k.focal, 1.0};
  const Vec3 dir = normalize(camera.pose.rotation.rotate(dir_cam));
  return Ray{camera.pose.translation.cast<float>(), dir.cast<float>()};
}

double visible_fraction(const SceneGeometry& geometry, const CameraPose& camera, int downscale) {
  CameraPose probe = camera;
  probe.intrinsics = camera.intrinsics.scaled(std::max(1, downscale));
  long total = 0, visible = 0;
  for (int y = 0; y < probe.intrinsics.height; ++y)
    for (int x = 0; x < probe.intrinsics.width; ++x) {
      const Ray ray = camera_ray(probe, x + 0.5, y + 0.5);
      if (!geometry.target_bvh.closest(ray).valid()) continue;
      ++total;
      const Hit hit = geometry.bvh.closest(ray);
      if (hit.valid() && geometry.prims[hit.prim].instance_id == kTargetMaskId) ++visible;
    }
  return total == 0 ? 0.0 : static_cast<double>(visible) / total;
}

std::vector<std::uint8_t> mask_to_gray(const Mask& mask) {
  std::vector<std::uint8_t> gray(mask.ids.size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const int id = mask.ids[i];
    gray[i] = id == 0 ? 0 : (id == kTargetMaskId ? 255 : static_cast<std::uint8_t>(40 + (id * 53) % 180));
  }
  return gray;
}

}  // namespace cadsynth
