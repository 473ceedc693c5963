#include "cadsynth/primitives.hpp"

#include <cmath>
#include <functional>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cadsynth/image.hpp"
#include "cadsynth/io.hpp"
#include "cadsynth/rng.hpp"

namespace cadsynth {
namespace {

// Each vertex carries its own normal and uv at the same index.
struct MeshBuilder {
  Mesh mesh;

  std::uint32_t vertex(const Vec3& p, const Vec3& n, const Vec2& uv) {
    mesh.vertices.push_back(p);
    mesh.normals.push_back(normalize(n));
    mesh.uvs.push_back(uv);
    return static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  }

  void triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    Triangle t;
    t.v = t.n = t.uv = {a, b, c};
    mesh.triangles.push_back(t);
  }

  void quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    triangle(a, b, c);
    triangle(a, c, d);
  }
};

// Closed surface of revolution around z from a profile of (radius, z) points.
Mesh revolve(const std::vector<Vec2>& profile, int segments, bool cap_bottom, bool cap_top) {
  MeshBuilder b;
  const double zmin = profile.front().y, zmax = profile.back().y;
  for (std::size_t k = 0; k + 1 < profile.size(); ++k) {
    const Vec2 p0 = profile[k], p1 = profile[k + 1];
    const double dr = p1.x - p0.x, dz = p1.y - p0.y;
    for (int i = 0; i < segments; ++i) {
      const double a0 = 2 * kPi * i / segments, a1 = 2 * kPi * (i + 1) / segments;
      auto at = [&](const Vec2& p, double a, double u) {
        const Vec3 n{dz * std::cos(a), dz * std::sin(a), -dr};
        const double v = (p.y - zmin) / (zmax - zmin);
        return b.vertex({p.x * std::cos(a), p.x * std::sin(a), p.y}, n, {u, v});
      };
      const double u0 = static_cast<double>(i) / segments, u1 = static_cast<double>(i + 1) / segments;
      const auto v00 = at(p0, a0, u0), v01 = at(p0, a1, u1), v11 = at(p1, a1, u1), v10 = at(p1, a0, u0);
      if (p1.x == 0) {
        b.triangle(v00, v01, v11);
      } else if (p0.x == 0) {
        b.triangle(v00, v11, v10);
      } else {
        b.quad(v00, v01, v11, v10);
      }
    }
  }
  auto cap = [&](const Vec2& p, double nz) {
    if (p.x == 0) return;
    const auto c = b.vertex({0, 0, p.y}, {0, 0, nz}, {0.5, 0.5});
    for (int i = 0; i < segments; ++i) {
      const double a0 = 2 * kPi * i / segments, a1 = 2 * kPi * (i + 1) / segments;
      const auto e0 = b.vertex({p.x * std::cos(a0), p.x * std::sin(a0), p.y}, {0, 0, nz},
                               {0.5 + 0.5 * std::cos(a0), 0.5 + 0.5 * std::sin(a0)});
      const auto e1 = b.vertex({p.x * std::cos(a1), p.x * std::sin(a1), p.y}, {0, 0, nz},
                               {0.5 + 0.5 * std::cos(a1), 0.5 + 0.5 * std::sin(a1)});
      if (nz > 0) {
        b.triangle(c, e0, e1);
      } else {
        b.triangle(c, e1, e0);
      }
    }
  };
  if (cap_bottom) cap(profile.front(), -1);
  if (cap_top) cap(profile.back(), 1);
  return b.mesh;
}

RgbImage make_texture(int size, const std::function<Vec3(double, double)>& color) {
  RgbImage img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const Vec3 c = color((x + 0.5) / size, (y + 0.5) / size);
      std::uint8_t* p = img.at(x, y);
      p[0] = static_cast<std::uint8_t>(std::lround(std::clamp(c.x, 0.0, 1.0) * 255));
      p[1] = static_cast<std::uint8_t>(std::lround(std::clamp(c.y, 0.0, 1.0) * 255));
      p[2] = static_cast<std::uint8_t>(std::lround(std::clamp(c.z, 0.0, 1.0) * 255));
    }
  return img;
}

Vec3 random_rgb(Rng& rng, double lo, double hi) { return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)}; }

// Value noise on a periodic lattice, in [0, 1].
double lattice_noise(double u, double v, int cells, std::uint64_t seed) {
  const double x = u * cells, y = v * cells;
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto value = [&](int i, int j) {
    i = ((i % cells) + cells) % cells;
    j = ((j % cells) + cells) % cells;
    return static_cast<double>(Rng::mix(seed ^ (static_cast<std::uint64_t>(i) * 73856093ULL) ^
                                        (static_cast<std::uint64_t>(j) * 19349663ULL)) >>
                               11) *
           0x1.0p-53;
  };
  const double sx = fx * fx * (3 - 2 * fx), sy = fy * fy * (3 - 2 * fy);
  const double a = value(x0, y0) * (1 - sx) + value(x0 + 1, y0) * sx;
  const double c = value(x0, y0 + 1) * (1 - sx) + value(x0 + 1, y0 + 1) * sx;
  return a * (1 - sy) + c * sy;
}

// Pattern family k cycles through checker, stripes, noise and grid.
RgbImage pattern_texture(int k, std::uint64_t seed, double lo, double hi) {
  Rng rng = Rng::stream(seed, {static_cast<std::uint64_t>(k)}, "demo-texture");
  const Vec3 a = random_rgb(rng, lo, hi), b = random_rgb(rng, lo, hi);
  const int cells = static_cast<int>(rng.uniform_int(2, 8));
  const std::uint64_t nseed = rng.next_u64();
  switch (k % 4) {
    case 0:
      return make_texture(64, [&](double u, double v) {
        return ((static_cast<int>(u * cells) + static_cast<int>(v * cells)) % 2) ? a : b;
      });
    case 1:
      return make_texture(64, [&](double u, double v) {
        const double s = 0.5 + 0.5 * std::sin(2 * kPi * (u * cells + 0.3 * lattice_noise(u, v, 4, nseed)));
        return a * s + b * (1 - s);
      });
    case 2:
      return make_texture(64, [&](double u, double v) {
        const double s = 0.6 * lattice_noise(u, v, cells * 2, nseed) + 0.4 * lattice_noise(u, v, cells * 4, nseed + 1);
        return a * s + b * (1 - s);
      });
    default:
      return make_texture(64, [&](double u, double v) {
        const double fu = u * cells - std::floor(u * cells), fv = v * cells - std::floor(v * cells);
        return (fu < 0.12 || fv < 0.12) ? b : a;
      });
  }
}

}  // namespace

Mesh make_box(const Vec3& h) {
  MeshBuilder b;
  struct Face {
    Vec3 n, u, v;
  };
  const Face faces[6] = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},  {{-1, 0, 0}, {0, -1, 0}, {0, 0, 1}},
                         {{0, 1, 0}, {-1, 0, 0}, {0, 0, 1}}, {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},
                         {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},  {{0, 0, -1}, {1, 0, 0}, {0, -1, 0}}};
  for (const Face& f : faces) {
    std::uint32_t idx[4];
    const double su[4] = {-1, 1, 1, -1}, sv[4] = {-1, -1, 1, 1};
    for (int k = 0; k < 4; ++k) {
      const Vec3 p = f.n + f.u * su[k] + f.v * sv[k];
      idx[k] = b.vertex(mul(p, h), f.n, {(su[k] + 1) / 2, (sv[k] + 1) / 2});
    }
    b.quad(idx[0], idx[1], idx[2], idx[3]);
  }
  return b.mesh;
}

Mesh make_cylinder(double radius, double height, int segments) {
  return revolve({{radius, 0}, {radius, height}}, segments, true, true);
}

Mesh make_cone(double radius, double height, int segments) {
  return revolve({{radius, 0}, {0, height}}, segments, true, false);
}

Mesh make_icosphere(double radius, int subdivisions) {
  const double t = (1 + std::sqrt(5.0)) / 2;
  std::vector<Vec3> pts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : pts) p = normalize(p);
  std::vector<std::array<std::uint32_t, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      pts.push_back(normalize((pts[a] + pts[b]) * 0.5));
      return mid[key] = static_cast<std::uint32_t>(pts.size() - 1);
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    for (const auto& f : faces) {
      const auto a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  MeshBuilder b;
  for (const Vec3& p : pts) {
    const double u = 0.5 + std::atan2(p.y, p.x) / (2 * kPi);
    const double v = 0.5 + std::asin(std::clamp(p.z, -1.0, 1.0)) / kPi;
    b.vertex(p * radius, p, {u, v});
  }
  for (const auto& f : faces) b.triangle(f[0], f[1], f[2]);
  return b.mesh;
}

Mesh make_torus(double major_radius, double minor_radius, int segments, int sides) {
  MeshBuilder b;
  for (int i = 0; i <= segments; ++i)
    for (int j = 0; j <= sides; ++j) {
      const double u = 2 * kPi * i / segments, v = 2 * kPi * j / sides;
      const Vec3 n{std::cos(v) * std::cos(u), std::cos(v) * std::sin(u), std::sin(v)};
      const Vec3 c{major_radius * std::cos(u), major_radius * std::sin(u), 0};
      b.vertex(c + n * minor_radius, n, {static_cast<double>(i) / segments, static_cast<double>(j) / sides});
    }
  auto id = [&](int i, int j) { return static_cast<std::uint32_t>(i * (sides + 1) + j); };
  for (int i = 0; i < segments; ++i)
    for (int j = 0; j < sides; ++j) b.quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
  return b.mesh;
}

void append_mesh(Mesh& a, const Mesh& b, const Vec3& offset) {
  const auto nv = static_cast<std::uint32_t>(a.vertices.size());
  const auto nn = static_cast<std::uint32_t>(a.normals.size());
  const auto nt = static_cast<std::uint32_t>(a.uvs.size());
  const bool uvs = a.has_uvs() == b.has_uvs() || a.vertices.empty();
  for (const Vec3& v : b.vertices) a.vertices.push_back(v + offset);
  a.normals.insert(a.normals.end(), b.normals.begin(), b.normals.end());
  if (uvs) {
    a.uvs.insert(a.uvs.end(), b.uvs.begin(), b.uvs.end());
  } else {
    a.uvs.clear();
  }
  for (Triangle t : b.triangles) {
    for (int k = 0; k < 3; ++k) {
      t.v[k] += nv;
      t.n[k] += nn;
      t.uv[k] = uvs ? t.uv[k] + nt : 0;
    }
    a.triangles.push_back(t);
  }
}

std::filesystem::path write_demo_assets(const std::filesystem::path& dir) {
  using nlohmann::json;
  constexpr std::uint64_t kSeed = 20240611;

  // Canister: body, shoulder and cap, textured with a label band.
  Mesh canister = revolve({{0.06, 0.0}, {0.06, 0.17}, {0.035, 0.2}, {0.0, 0.2}}, 32, true, false);
  append_mesh(canister, make_cylinder(0.018, 0.025, 16), {0, 0, 0.2});
  write_file(dir / "target_canister.obj", write_obj(canister));
  const RgbImage label = make_texture(128, [](double u, double v) {
    if (v > 0.35 && v < 0.7) {
      const bool stripe = std::fmod(u * 12, 1.0) < 0.2 && v > 0.45 && v < 0.6;
      return stripe ? Vec3{0.05, 0.25, 0.7} : Vec3{0.95, 0.95, 0.95};
    }
    return Vec3{0.1, 0.35, 0.85};
  });
  write_file(dir / "target_label.png", ByteView(encode_png(label)));

  write_file(dir / "box.obj", write_obj(make_box({0.07, 0.05, 0.04})));
  write_file(dir / "cylinder.stl", ByteView(write_stl_binary(make_cylinder(0.04, 0.12, 24))));
  write_file(dir / "cone.stl", write_stl_ascii(make_cone(0.05, 0.1, 24), "cone"));
  write_file(dir / "sphere.obj", write_obj(make_icosphere(0.05, 2)));
  write_file(dir / "torus.obj", write_obj(make_torus(0.05, 0.018, 24, 12)));
  write_file(dir / "hex_prism.stl", ByteView(write_stl_binary(make_cylinder(0.045, 0.06, 6))));

  json manifest = {
      {"target", {{"name", "canister"}, {"mesh", "target_canister.obj"}, {"color", {1.0, 1.0, 1.0}}, {"texture", "target_label.png"}}},
      {"distractors", {"box.obj", "cylinder.stl", "cone.stl", "sphere.obj", "torus.obj", "hex_prism.stl"}}};
  auto pool = [&](const char* key, const char* prefix, int count, double lo, double hi) {
    json list = json::array();
    for (int k = 0; k < count; ++k) {
      const std::string name = fmt::format("{}_{}.png", prefix, k);
      const std::uint64_t seed = Rng::derive(kSeed, {}, prefix);
      write_file(dir / name, ByteView(encode_png(pattern_texture(k, seed, lo, hi))));
      list.push_back(name);
    }
    manifest[key] = list;
  };
  pool("floor_textures", "floor", 7, 0.15, 0.6);
  pool("support_textures", "support", 6, 0.3, 0.8);
  pool("distractor_textures", "distractor", 6, 0.1, 0.95);
  const std::filesystem::path path = dir / "manifest.json";
  write_file(path, manifest.dump(2) + "\n");
  return path;
}

}  // namespace cadsynth
