#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cadsynth/geometry.hpp"
#include "cadsynth/image.hpp"
#include "cadsynth/mesh.hpp"

namespace cadsynth {

// Linear-light RGB in [0,1].
using Rgb = Vec3;

struct Material {
  enum class Kind { lambertian };

  Rgb base_color{0.8, 0.8, 0.8};
  std::shared_ptr<const Texture> texture;
  Kind kind = Kind::lambertian;
};

// Which mesh an instance uses.
struct AssetId {
  enum class Role { target, distractor };

  Role role = Role::target;
  int index = 0;

  static AssetId target() { return {Role::target, 0}; }
  static AssetId distractor(int i) { return {Role::distractor, i}; }

  std::string to_string() const;
  static AssetId parse(const std::string& s);  // throws InvalidScene

  bool operator==(const AssetId&) const = default;
};

// Which texture a surface samples.
struct TextureRef {
  enum class Pool { target, floor, support, distractor };

  Pool pool = Pool::floor;
  int index = 0;

  std::string to_string() const;
  static TextureRef parse(const std::string& s);  // throws InvalidScene

  bool operator==(const TextureRef&) const = default;
};

struct TargetAsset {
  std::string name;
  Mesh mesh;
  Material material;
};

struct DistractorAsset {
  std::string name;
  Mesh mesh;
};

struct AssetLibrary {
  TargetAsset target;
  std::vector<DistractorAsset> distractors;
  std::vector<std::shared_ptr<const Texture>> floor_textures;
  std::vector<std::shared_ptr<const Texture>> support_textures;
  std::vector<std::shared_ptr<const Texture>> distractor_textures;

  // Throw AssetMissing for unresolvable references.
  const Mesh& mesh(const AssetId& id) const;
  const Texture& texture(const TextureRef& ref) const;
};

// Default: all available textures are used.
inline constexpr int kDefaultFloorTextures = 7;
inline constexpr int kDefaultSupportTextures = 6;
inline constexpr int kDefaultDistractorTextures = 6;

// Reads the JSON asset manifest:
//   { "target": {"mesh": "t.obj", "color": [r,g,b], "texture": "t.png"},
//     "distractors": [{"mesh": "d0.stl"}, ...],
//     "floor_textures": [...], "support_textures": [...], "distractor_textures": [...] }
// Relative paths resolve against the manifest's directory. Throws AssetMissing
// naming the missing path, ConfigError for schema problems, MalformedMesh /
// MalformedTexture for bad files.
AssetLibrary load_asset_library(const std::filesystem::path& manifest_path);

// Throws ConfigError when the Material invariant (texture implies uvs) fails.
void validate_library(const AssetLibrary& library);

}  // namespace cadsynth
