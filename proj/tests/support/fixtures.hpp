#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>

#include "cadsynth/assets.hpp"
#include "cadsynth/config.hpp"
#include "cadsynth/io.hpp"
#include "cadsynth/primitives.hpp"

namespace cadsynth::testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("cadsynth_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Demo asset set written once per process.
inline const fs::path& demo_manifest() {
  static TempDir dir("assets");
  static const fs::path manifest = write_demo_assets(dir.path());
  return manifest;
}

inline const AssetLibrary& demo_library() {
  static const AssetLibrary lib = load_asset_library(demo_manifest());
  return lib;
}

// Reduced-size generation settings for quick runs.
inline GenConfig small_config(int width = 96, int height = 72) {
  GenConfig c;
  c.resolution = {width, height};
  c.n_scenes = 2;
  c.cam_poses = 2;
  c.n_distractors = 4;
  c.threads = 1;
  c.min_pixels = 4;
  return c;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr
};

inline CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return result;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

inline std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace cadsynth::testing
