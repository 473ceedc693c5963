#include "cadsynth/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <functional>
#include <vector>

#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"

namespace cadsynth {

using nlohmann::json;

std::string Resolution::to_string() const { return fmt::format("{}x{}", width, height); }

Resolution Resolution::parse(const std::string& s) {
  const auto x = s.find('x');
  Resolution r;
  auto num = [&](std::string_view part, int& out) {
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc() && p == part.data() + part.size();
  };
  if (x == std::string::npos || !num(std::string_view(s).substr(0, x), r.width) ||
      !num(std::string_view(s).substr(x + 1), r.height) || r.width < 1 || r.height < 1)
    throw ConfigError(fmt::format("bad resolution '{}', expected WIDTHxHEIGHT", s));
  return r;
}

namespace {

struct Field {
  const char* name;
  std::function<void(GenConfig&, const json&)> set;
  std::function<json(const GenConfig&)> get;
};

template <typename T>
T as(const json& v, const char* name) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("field '{}' has the wrong type ({})", name, v.dump()));
  }
}

Range as_range(const json& v, const char* name) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(fmt::format("field '{}' must be [min, max]", name));
  return {v[0].get<double>(), v[1].get<double>()};
}

IntRange as_int_range(const json& v, const char* name) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    throw ConfigError(fmt::format("field '{}' must be [min, max] integers", name));
  return {v[0].get<int>(), v[1].get<int>()};
}

#define CADSYNTH_SCALAR(member, type)                                               \
  Field {                                                                           \
    #member, [](GenConfig& c, const json& v) { c.member = as<type>(v, #member); }, \
        [](const GenConfig& c) { return json(c.member); }                           \
  }
#define CADSYNTH_RANGE(member)                                                         \
  Field {                                                                              \
    #member, [](GenConfig& c, const json& v) { c.member = as_range(v, #member); },     \
        [](const GenConfig& c) { return json::array({c.member.min, c.member.max}); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"resolution",
            [](GenConfig& c, const json& v) {
              if (v.is_string()) {
                c.resolution = Resolution::parse(v.get<std::string>());
              } else if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
                c.resolution = {v[0].get<int>(), v[1].get<int>()};
              } else {
                throw ConfigError("field 'resolution' must be \"WxH\" or [w, h]");
              }
            },
            [](const GenConfig& c) { return json(c.resolution.to_string()); }},
      CADSYNTH_SCALAR(n_scenes, int),
      CADSYNTH_SCALAR(cam_poses, int),
      CADSYNTH_SCALAR(n_distractors, int),
      CADSYNTH_SCALAR(n_floor_textures, int),
      CADSYNTH_SCALAR(n_support_textures, int),
      CADSYNTH_SCALAR(n_distractor_textures, int),
      CADSYNTH_SCALAR(seed, std::uint64_t),
      CADSYNTH_SCALAR(visibility_min, double),
      CADSYNTH_SCALAR(class_name, std::string),
      CADSYNTH_SCALAR(target_scale, double),
      CADSYNTH_RANGE(distractor_scale),
      CADSYNTH_RANGE(drop_height),
      CADSYNTH_RANGE(camera_distance),
      CADSYNTH_RANGE(camera_elevation_deg),
      CADSYNTH_SCALAR(look_jitter, double),
      CADSYNTH_SCALAR(fov_deg, double),
      CADSYNTH_SCALAR(max_camera_attempts, int),
      Field{"light_count", [](GenConfig& c, const json& v) { c.light_count = as_int_range(v, "light_count"); },
            [](const GenConfig& c) { return json::array({c.light_count.min, c.light_count.max}); }},
      CADSYNTH_RANGE(light_intensity),
      CADSYNTH_RANGE(light_height),
      CADSYNTH_SCALAR(light_spread, double),
      CADSYNTH_SCALAR(light_radius_max, double),
      CADSYNTH_SCALAR(shadow_samples, int),
      CADSYNTH_SCALAR(table_width, double),
      CADSYNTH_SCALAR(table_depth, double),
      CADSYNTH_SCALAR(table_height, double),
      CADSYNTH_SCALAR(floor_half_size, double),
      CADSYNTH_SCALAR(min_pixels, int),
      CADSYNTH_SCALAR(threads, int),
      CADSYNTH_SCALAR(write_masks, bool),
      CADSYNTH_SCALAR(write_scenes, bool),
  };
  return table;
}

#undef CADSYNTH_SCALAR
#undef CADSYNTH_RANGE

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_range(const Range& r, const char* name, double lo, double hi) {
  check(std::isfinite(r.min) && std::isfinite(r.max) && r.min <= r.max && r.min >= lo && r.max <= hi,
        fmt::format("{} must satisfy {} <= min <= max <= {}", name, lo, hi));
}

}  // namespace

void set_field(GenConfig& config, const std::string& name, const json& value) {
  for (const Field& f : fields()) {
    if (name == f.name) {
      f.set(config, value);
      return;
    }
  }
  throw UnknownParameter(fmt::format("unknown generation parameter '{}'", name));
}

void validate(const GenConfig& c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  check(c.resolution.width >= 1 && c.resolution.height >= 1, "resolution must be positive");
  check(c.n_scenes >= 0, "n_scenes must be >= 0");
  check(c.cam_poses >= 1, "cam_poses must be >= 1");
  check(c.n_distractors >= 0, "n_distractors must be >= 0");
  check(c.n_floor_textures >= 1 && c.n_support_textures >= 1 && c.n_distractor_textures >= 1,
        "texture pool sizes must be >= 1");
  check(c.visibility_min >= 0 && c.visibility_min <= 1, "visibility_min must be in [0, 1]");
  check(!c.class_name.empty(), "class_name must not be empty");
  check(c.target_scale > 0 && std::isfinite(c.target_scale), "target_scale must be positive");
  check_range(c.distractor_scale, "distractor_scale", 1e-9, inf);
  check_range(c.drop_height, "drop_height", 0, inf);
  check_range(c.camera_distance, "camera_distance", 1e-9, inf);
  check_range(c.camera_elevation_deg, "camera_elevation_deg", 0, 90);
  check(c.look_jitter >= 0, "look_jitter must be >= 0");
  check(c.fov_deg > 0 && c.fov_deg < 180, "fov_deg must be in (0, 180)");
  check(c.max_camera_attempts >= 1, "max_camera_attempts must be >= 1");
  check(c.light_count.min >= 0 && c.light_count.min <= c.light_count.max, "light_count must be 0 <= min <= max");
  check_range(c.light_intensity, "light_intensity", 0, inf);
  check_range(c.light_height, "light_height", 0, inf);
  check(c.light_spread >= 0 && c.light_radius_max >= 0, "light_spread and light_radius_max must be >= 0");
  check(c.shadow_samples >= 1, "shadow_samples must be >= 1");
  check(c.table_width > 0 && c.table_depth > 0 && c.table_height > 0, "table dimensions must be positive");
  check(c.floor_half_size > 0, "floor_half_size must be positive");
  check(c.min_pixels >= 1, "min_pixels must be >= 1");
  check(c.threads >= 0, "threads must be >= 0");
}

json to_json(const GenConfig& config) {
  json j = json::object();
  for (const Field& f : fields()) j[f.name] = f.get(config);
  j["n_images"] = config.n_images();
  return j;
}

GenConfig gen_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("generation config must be a JSON object");
  GenConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "n_images") continue;
    set_field(c, key, value);
  }
  if (j.contains("n_images")) {
    const json& n = j["n_images"];
    if (!n.is_number_integer() || n.get<long long>() != c.n_images())
      throw ConfigError(fmt::format("n_images {} does not equal n_scenes x cam_poses = {}", n.dump(), c.n_images()));
  }
  validate(c);
  return c;
}

GenConfig load_gen_config(const std::string& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", path, line_of_offset(text, e.byte), e.what()));
  }
  try {
    return gen_config_from_json(j);
  } catch (const ConfigError& e) {
    // Point at the offending key when one field is to blame.
    std::size_t line = 0;
    if (j.is_object()) {
      for (const auto& [key, value] : j.items()) {
        GenConfig scratch;
        try {
          if (key != "n_images") set_field(scratch, key, value);
        } catch (const ConfigError&) {
          const auto at = text.find('"' + key + '"');
          if (at != std::string::npos) line = line_of_offset(text, at);
          break;
        }
      }
    }
    const std::string msg =
        line > 0 ? fmt::format("{}:{}: {}", path, line, e.what()) : fmt::format("{}: {}", path, e.what());
    if (dynamic_cast<const UnknownParameter*>(&e)) throw UnknownParameter(msg);
    throw ConfigError(msg);
  }
}

}  // namespace cadsynth
