#pragma once

#include <cstdint>
#include <vector>

#include "cadsynth/io.hpp"

namespace cadsynth {

// Row-major 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  bool operator==(const RgbImage&) const = default;
};

using Texture = RgbImage;
using Image = RgbImage;

// Decodes 8/16-bit gray, gray+alpha, RGB, RGBA and palette PNGs to 8-bit RGB.
// Alpha is dropped, gray is replicated, 16-bit samples keep the high byte.
// Throws MalformedTexture.
RgbImage decode_png(ByteView bytes);
inline Texture load_texture(ByteView bytes) { return decode_png(bytes); }

Bytes encode_png(const RgbImage& image, int compression_level = 3);
Bytes encode_png_gray(int width, int height, const std::vector<std::uint8_t>& gray,
                      int compression_level = 3);

}  // namespace cadsynth
