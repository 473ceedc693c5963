#pragma once

#include <filesystem>

#include "cadsynth/mesh.hpp"

namespace cadsynth {

// Procedural meshes, centered on the origin unless stated, z-up, with uvs.
Mesh make_box(const Vec3& half_extents);
Mesh make_cylinder(double radius, double height, int segments);  // base at z = 0
Mesh make_cone(double radius, double height, int segments);      // base at z = 0
Mesh make_icosphere(double radius, int subdivisions);
Mesh make_torus(double major_radius, double minor_radius, int segments, int sides);

// Appends b to a.
void append_mesh(Mesh& a, const Mesh& b, const Vec3& offset = {});

// Writes a self-contained demo asset set (target canister, six distractors in
// OBJ and STL, 7 floor / 6 support / 6 distractor PNG textures) and returns
// the path of its manifest.json.
std::filesystem::path write_demo_assets(const std::filesystem::path& dir);

}  // namespace cadsynth
