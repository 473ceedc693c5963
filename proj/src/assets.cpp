#include "cadsynth/assets.hpp"

#include <fmt/format.h>

#include <charconv>
#include <nlohmann/json.hpp>

#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"

namespace cadsynth {

using nlohmann::json;

namespace {

bool parse_index(std::string_view s, int& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && out >= 0;
}

const char* pool_name(TextureRef::Pool pool) {
  switch (pool) {
    case TextureRef::Pool::target: return "target";
    case TextureRef::Pool::floor: return "floor";
    case TextureRef::Pool::support: return "support";
    case TextureRef::Pool::distractor: return "distractor";
  }
  return "?";
}

}  // namespace

std::string AssetId::to_string() const {
  return role == Role::target ? std::string("target") : fmt::format("distractor/{}", index);
}

AssetId AssetId::parse(const std::string& s) {
  if (s == "target") return target();
  int i = 0;
  if (s.rfind("distractor/", 0) == 0 && parse_index(std::string_view(s).substr(11), i)) return distractor(i);
  throw InvalidScene(fmt::format("bad asset id '{}'", s));
}

std::string TextureRef::to_string() const {
  return pool == Pool::target ? std::string("target") : fmt::format("{}/{}", pool_name(pool), index);
}

TextureRef TextureRef::parse(const std::string& s) {
  if (s == "target") return {Pool::target, 0};
  const auto slash = s.find('/');
  int i = 0;
  if (slash != std::string::npos && parse_index(std::string_view(s).substr(slash + 1), i)) {
    const std::string pool = s.substr(0, slash);
    for (Pool p : {Pool::floor, Pool::support, Pool::distractor})
      if (pool == pool_name(p)) return {p, i};
  }
  throw InvalidScene(fmt::format("bad texture reference '{}'", s));
}

const Mesh& AssetLibrary::mesh(const AssetId& id) const {
  if (id.role == AssetId::Role::target) return target.mesh;
  if (id.index < 0 || id.index >= static_cast<int>(distractors.size()))
    throw AssetMissing(fmt::format("asset '{}' not in library ({} distractors)", id.to_string(), distractors.size()));
  return distractors[id.index].mesh;
}

const Texture& AssetLibrary::texture(const TextureRef& ref) const {
  const std::vector<std::shared_ptr<const Texture>>* pool = nullptr;
  switch (ref.pool) {
    case TextureRef::Pool::target:
      if (!target.material.texture) throw AssetMissing("target has no texture");
      return *target.material.texture;
    case TextureRef::Pool::floor: pool = &floor_textures; break;
    case TextureRef::Pool::support: pool = &support_textures; break;
    case TextureRef::Pool::distractor: pool = &distractor_textures; break;
  }
  if (ref.index < 0 || ref.index >= static_cast<int>(pool->size()) || !(*pool)[ref.index])
    throw AssetMissing(fmt::format("texture '{}' not in library", ref.to_string()));
  return *(*pool)[ref.index];
}

void validate_library(const AssetLibrary& library) {
  validate_mesh(library.target.mesh);
  if (library.target.material.texture && !library.target.mesh.has_uvs())
    throw ConfigError("target has a texture but its mesh carries no uvs");
  for (const auto& d : library.distractors) validate_mesh(d.mesh);
}

AssetLibrary load_asset_library(const std::filesystem::path& manifest_path) {
  const std::string text = read_text_file(manifest_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(
        fmt::format("{}:{}: {}", manifest_path.string(), line_of_offset(text, e.byte), e.what()));
  }
  if (!j.is_object()) throw ConfigError(manifest_path.string() + ": asset manifest must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "target" && key != "distractors" && key != "floor_textures" && key != "support_textures" &&
        key != "distractor_textures")
      throw UnknownParameter(fmt::format("{}: unknown asset manifest key '{}'", manifest_path.string(), key));
  }
  const std::filesystem::path base = manifest_path.parent_path();
  auto resolve = [&](const json& v, const std::string& role) {
    if (!v.is_string()) throw ConfigError(fmt::format("{}: '{}' must be a path string", manifest_path.string(), role));
    std::filesystem::path p = v.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  auto texture_from = [&](const json& v, const std::string& role) {
    const auto path = resolve(v, role);
    try {
      return std::make_shared<const Texture>(load_texture(read_file(path)));
    } catch (const MalformedTexture& e) {
      throw MalformedTexture(path.string() + ": " + e.what());
    }
  };

  AssetLibrary lib;
  if (!j.contains("target") || !j["target"].is_object() || !j["target"].contains("mesh"))
    throw ConfigError(manifest_path.string() + ": 'target.mesh' is required");
  const json& t = j["target"];
  for (const auto& [key, value] : t.items())
    if (key != "mesh" && key != "color" && key != "texture" && key != "name")
      throw UnknownParameter(fmt::format("{}: unknown target key '{}'", manifest_path.string(), key));
  const auto target_path = resolve(t["mesh"], "target");
  lib.target.mesh = load_mesh_file(target_path);
  lib.target.name = t.value("name", target_path.stem().string());
  if (t.contains("color")) {
    const json& c = t["color"];
    if (!c.is_array() || c.size() != 3 || !c[0].is_number() || !c[1].is_number() || !c[2].is_number())
      throw ConfigError(manifest_path.string() + ": target.color must be [r, g, b]");
    lib.target.material.base_color = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
  }
  if (t.contains("texture")) lib.target.material.texture = texture_from(t["texture"], "target.texture");

  if (j.contains("distractors")) {
    if (!j["distractors"].is_array()) throw ConfigError(manifest_path.string() + ": 'distractors' must be a list");
    int i = 0;
    for (const json& d : j["distractors"]) {
      const std::string role = fmt::format("distractor[{}]", i++);
      const json& mesh_field = d.is_object() && d.contains("mesh") ? d["mesh"] : d;
      const auto path = resolve(mesh_field, role);
      lib.distractors.push_back({path.stem().string(), load_mesh_file(path)});
    }
  }
  auto pool = [&](const char* key, std::vector<std::shared_ptr<const Texture>>& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_array()) throw ConfigError(fmt::format("{}: '{}' must be a list", manifest_path.string(), key));
    int i = 0;
    for (const json& p : j[key]) out.push_back(texture_from(p, fmt::format("{}[{}]", key, i++)));
  };
  pool("floor_textures", lib.floor_textures);
  pool("support_textures", lib.support_textures);
  pool("distractor_textures", lib.distractor_textures);
  validate_library(lib);
  return lib;
}

}  // namespace cadsynth
