#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cadsynth/geometry.hpp"
#include "cadsynth/io.hpp"

namespace cadsynth {

struct Triangle {
  std::array<std::uint32_t, 3> v{};
  std::array<std::uint32_t, 3> n{};
  std::array<std::uint32_t, 3> uv{};  // meaningful only when the mesh has uvs

  bool operator==(const Triangle&) const = default;
};

// Triangle mesh in scene units (meters), z-up.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<Vec2> uvs;
  std::vector<Triangle> triangles;

  bool has_uvs() const { return !uvs.empty(); }
  bool operator==(const Mesh&) const = default;
};

// Wavefront OBJ, v/vt/vn/f records. Polygons are fan-triangulated and faces
// without normals get a computed face normal. Throws MalformedMesh.
Mesh load_obj(std::string_view text);

// Binary or ASCII STL. One vertex triple per facet. Throws MalformedMesh.
Mesh load_stl(ByteView bytes);

// Dispatches on extension (.obj / .stl).
Mesh load_mesh_file(const std::filesystem::path& path);

// Debug writer. load_obj(write_obj(m)) == m for any mesh produced by load_obj.
std::string write_obj(const Mesh& mesh);
Bytes write_stl_binary(const Mesh& mesh);
std::string write_stl_ascii(const Mesh& mesh, std::string_view name = "mesh");

// Throws MalformedMesh on index, finiteness or empty-mesh violations.
void validate_mesh(const Mesh& mesh);

Aabb3 mesh_bounds(const Mesh& mesh);

// Unit face normal; +z for degenerate triangles.
Vec3 face_normal(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace cadsynth
