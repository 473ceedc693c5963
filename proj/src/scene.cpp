#include "cadsynth/scene.hpp"

#include <fmt/format.h>

#include "cadsynth/error.hpp"

namespace cadsynth {

using nlohmann::json;

Intrinsics Intrinsics::scaled(int factor) const {
  Intrinsics s = *this;
  s.focal = focal / factor;
  s.cx = cx / factor;
  s.cy = cy / factor;
  s.width = std::max(1, width / factor);
  s.height = std::max(1, height / factor);
  return s;
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Intrinsics& intrinsics) {
  const Vec3 forward = normalize(target - eye);
  Vec3 right = cross(forward, Vec3{0, 0, 1});
  if (length(right) < 1e-9) right = cross(forward, Vec3{0, 1, 0});
  right = normalize(right);
  const Vec3 down = cross(forward, right);
  return {Pose{Quat::from_basis(right, down, forward), eye}, intrinsics};
}

Aabb3 instance_bounds(const Instance& instance, const AssetLibrary& assets) {
  const Mesh& mesh = assets.mesh(instance.asset);
  Aabb3 box;
  for (const Vec3& v : mesh.vertices) box.expand(instance.pose.apply(v * instance.scale));
  return box;
}

void validate_scene(const SceneSpec& scene) {
  if (!scene.instances.empty() && scene.instances[0].asset.role != AssetId::Role::target)
    throw InvalidScene("the first instance must be the target");
  for (std::size_t i = 1; i < scene.instances.size(); ++i)
    if (scene.instances[i].asset.role == AssetId::Role::target) throw InvalidScene("more than one target instance");
  if (scene.instances.size() >= 65535) throw InvalidScene("too many instances");
  for (const Instance& inst : scene.instances) {
    if (std::abs(inst.pose.rotation.norm() - 1.0) > 1e-9) throw InvalidScene("instance rotation is not a unit quaternion");
    if (inst.pose.translation.z < 0) throw InvalidScene("instance below the floor plane");
    if (!(inst.scale > 0)) throw InvalidScene("instance scale must be positive");
  }
  for (const Light& l : scene.lights)
    if (l.intensity.x < 0 || l.intensity.y < 0 || l.intensity.z < 0 || l.radius < 0)
      throw InvalidScene("light intensity and radius must be non-negative");
  if (scene.camera) {
    const Intrinsics& k = scene.camera->intrinsics;
    if (!(k.focal > 0)) throw InvalidScene("camera focal length must be positive");
    if (k.width != scene.resolution.width || k.height != scene.resolution.height)
      throw InvalidScene("camera image size does not match the scene resolution");
  }
  if (scene.shadow_samples < 1) throw InvalidScene("shadow_samples must be >= 1");
}

namespace {

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json vec2(const Vec2& v) { return json::array({v.x, v.y}); }

Vec3 get_vec(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw InvalidScene(fmt::format("'{}' must be a 3-vector", what));
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec2 get_vec2(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw InvalidScene(fmt::format("'{}' must be a 2-vector", what));
  return {j[0].get<double>(), j[1].get<double>()};
}

json pose_json(const Pose& p) {
  const Quat& q = p.rotation;
  return {{"rotation", json::array({q.w, q.x, q.y, q.z})}, {"translation", vec(p.translation)}};
}

Pose get_pose(const json& j) {
  const json& q = j.at("rotation");
  if (!q.is_array() || q.size() != 4) throw InvalidScene("rotation must be [w, x, y, z]");
  return {Quat{q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()},
          get_vec(j.at("translation"), "translation")};
}

}  // namespace

json to_json(const SceneSpec& s) {
  json j;
  j["seed"] = s.seed;
  j["scene_index"] = s.scene_index;
  j["camera_index"] = s.camera_index;
  j["resolution"] = json::array({s.resolution.width, s.resolution.height});
  j["floor"] = {{"half_size", s.floor.half_size}, {"texture", s.floor.texture.to_string()}};
  if (s.table) {
    const TableSpec& t = *s.table;
    j["table"] = {{"center", vec2(t.center)}, {"width", t.width},
                  {"depth", t.depth},         {"height", t.height},
                  {"top_thickness", t.top_thickness}, {"leg_size", t.leg_size},
                  {"texture", t.texture.to_string()}};
  } else {
    j["table"] = nullptr;
  }
  json instances = json::array();
  for (const Instance& inst : s.instances) {
    json ji = {{"asset", inst.asset.to_string()},
               {"pose", pose_json(inst.pose)},
               {"scale", inst.scale},
               {"color", vec(inst.color)}};
    ji["texture"] = inst.texture ? json(inst.texture->to_string()) : json(nullptr);
    instances.push_back(std::move(ji));
  }
  j["instances"] = std::move(instances);
  json lights = json::array();
  for (const Light& l : s.lights)
    lights.push_back({{"position", vec(l.position)}, {"intensity", vec(l.intensity)}, {"radius", l.radius}});
  j["lights"] = std::move(lights);
  if (s.camera) {
    const Intrinsics& k = s.camera->intrinsics;
    j["camera"] = {{"pose", pose_json(s.camera->pose)},
                   {"focal", k.focal},
                   {"principal_point", json::array({k.cx, k.cy})},
                   {"size", json::array({k.width, k.height})}};
  } else {
    j["camera"] = nullptr;
  }
  j["shadow_samples"] = s.shadow_samples;
  return j;
}

SceneSpec scene_from_json(const json& j) {
  try {
    SceneSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.scene_index = j.at("scene_index").get<int>();
    s.camera_index = j.at("camera_index").get<int>();
    const json& r = j.at("resolution");
    s.resolution = {r.at(0).get<int>(), r.at(1).get<int>()};
    s.floor.half_size = j.at("floor").at("half_size").get<double>();
    s.floor.texture = TextureRef::parse(j.at("floor").at("texture").get<std::string>());
    if (const json& t = j.at("table"); !t.is_null()) {
      TableSpec table;
      table.center = get_vec2(t.at("center"), "table.center");
      table.width = t.at("width").get<double>();
      table.depth = t.at("depth").get<double>();
      table.height = t.at("height").get<double>();
      table.top_thickness = t.at("top_thickness").get<double>();
      table.leg_size = t.at("leg_size").get<double>();
      table.texture = TextureRef::parse(t.at("texture").get<std::string>());
      s.table = table;
    }
    for (const json& ji : j.at("instances")) {
      Instance inst;
      inst.asset = AssetId::parse(ji.at("asset").get<std::string>());
      inst.pose = get_pose(ji.at("pose"));
      inst.scale = ji.at("scale").get<double>();
      inst.color = get_vec(ji.at("color"), "color");
      if (!ji.at("texture").is_null()) inst.texture = TextureRef::parse(ji.at("texture").get<std::string>());
      s.instances.push_back(inst);
    }
    for (const json& jl : j.at("lights"))
      s.lights.push_back({get_vec(jl.at("position"), "light.position"), get_vec(jl.at("intensity"), "light.intensity"),
                          jl.at("radius").get<double>()});
    if (const json& c = j.at("camera"); !c.is_null()) {
      CameraPose cam;
      cam.pose = get_pose(c.at("pose"));
      cam.intrinsics.focal = c.at("focal").get<double>();
      cam.intrinsics.cx = c.at("principal_point").at(0).get<double>();
      cam.intrinsics.cy = c.at("principal_point").at(1).get<double>();
      cam.intrinsics.width = c.at("size").at(0).get<int>();
      cam.intrinsics.height = c.at("size").at(1).get<int>();
      s.camera = cam;
    }
    s.shadow_samples = j.at("shadow_samples").get<int>();
    validate_scene(s);
    return s;
  } catch (const json::exception& e) {
    throw InvalidScene(std::string("scene JSON: ") + e.what());
  }
}

}  // namespace cadsynth
