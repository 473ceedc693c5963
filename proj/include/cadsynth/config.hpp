#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace cadsynth {

struct Resolution {
  int width = 640;
  int height = 480;

  std::string to_string() const;
  static Resolution parse(const std::string& s);  // "960x540"; throws ConfigError

  bool operator==(const Resolution&) const = default;
};

struct Range {
  double min = 0;
  double max = 0;

  bool operator==(const Range&) const = default;
};

struct IntRange {
  int min = 0;
  int max = 0;

  bool operator==(const IntRange&) const = default;
};

// Generation parameters. Defaults follow the best-case row of the parameter
// study where it states a value; the rest are tunable sampling ranges.
struct GenConfig {
  Resolution resolution{960, 540};
  int n_scenes = 20;
  int cam_poses = 5;
  int n_distractors = 20;
  int n_floor_textures = 7;
  int n_support_textures = 6;
  int n_distractor_textures = 6;
  std::uint64_t seed = 0;
  double visibility_min = 0.05;
  std::string class_name = "target";

  double target_scale = 1.0;
  Range distractor_scale{0.8, 1.2};
  Range drop_height{0.05, 0.40};        // meters above the table top
  Range camera_distance{2.0, 6.0};      // multiples of the target bounding radius
  Range camera_elevation_deg{15.0, 75.0};
  double look_jitter = 0.25;            // multiple of the target bounding radius
  double fov_deg = 60.0;                // horizontal
  int max_camera_attempts = 64;
  IntRange light_count{1, 3};
  Range light_intensity{2.0, 6.0};
  Range light_height{1.0, 2.0};         // meters above the table top
  double light_spread = 1.5;            // horizontal radius around the table center
  double light_radius_max = 0.1;
  int shadow_samples = 1;

  double table_width = 1.6;
  double table_depth = 1.0;
  double table_height = 0.75;
  double floor_half_size = 6.0;

  int min_pixels = 16;
  int threads = 0;  // 0 = hardware concurrency
  bool write_masks = false;
  bool write_scenes = true;

  int n_images() const { return n_scenes * cam_poses; }

  bool operator==(const GenConfig&) const = default;
};

// Throws ConfigError when fields are out of range.
void validate(const GenConfig& config);

nlohmann::json to_json(const GenConfig& config);

// Strict: unknown keys raise UnknownParameter, a present "n_images" must equal
// n_scenes * cam_poses. Missing keys keep their defaults.
GenConfig gen_config_from_json(const nlohmann::json& j);

// Applies a single named field; the sweep grid uses this. Throws
// UnknownParameter for unrecognised names.
void set_field(GenConfig& config, const std::string& name, const nlohmann::json& value);

GenConfig load_gen_config(const std::string& path);

}  // namespace cadsynth
