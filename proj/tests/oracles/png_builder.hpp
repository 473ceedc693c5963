#pragma once

// Minimal PNG writer built directly on zlib: signature, IHDR, optional PLTE,
// one IDAT with filter type 0 on every row, IEND.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

namespace cadsynth::oracle {

class PngBuilder {
 public:
  // color_type: 0 gray, 2 rgb, 3 palette, 4 gray+alpha, 6 rgba.
  PngBuilder(int width, int height, int bit_depth, int color_type)
      : width_(width), height_(height), bit_depth_(bit_depth), color_type_(color_type) {}

  PngBuilder& palette(const std::vector<std::uint8_t>& rgb) {
    palette_ = rgb;
    return *this;
  }

  // Raw unfiltered scanlines, concatenated without filter bytes.
  std::vector<std::uint8_t> build(const std::vector<std::uint8_t>& rows) const {
    const std::size_t stride = rows.size() / static_cast<std::size_t>(height_);
    std::vector<std::uint8_t> filtered;
    for (int y = 0; y < height_; ++y) {
      filtered.push_back(0);
      filtered.insert(filtered.end(), rows.begin() + y * stride, rows.begin() + (y + 1) * stride);
    }
    uLongf len = compressBound(filtered.size());
    std::vector<std::uint8_t> z(len);
    if (compress(z.data(), &len, filtered.data(), filtered.size()) != Z_OK) throw std::runtime_error("zlib");
    z.resize(len);

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> ihdr;
    be32(ihdr, width_);
    be32(ihdr, height_);
    ihdr.push_back(static_cast<std::uint8_t>(bit_depth_));
    ihdr.push_back(static_cast<std::uint8_t>(color_type_));
    ihdr.insert(ihdr.end(), {0, 0, 0});
    chunk(out, "IHDR", ihdr);
    if (!palette_.empty()) chunk(out, "PLTE", palette_);
    chunk(out, "IDAT", z);
    chunk(out, "IEND", {});
    return out;
  }

 private:
  static void be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    for (int s = 24; s >= 0; s -= 8) v.push_back(static_cast<std::uint8_t>(x >> s));
  }

  static void chunk(std::vector<std::uint8_t>& out, const std::string& type, const std::vector<std::uint8_t>& data) {
    be32(out, static_cast<std::uint32_t>(data.size()));
    std::vector<std::uint8_t> body(type.begin(), type.end());
    body.insert(body.end(), data.begin(), data.end());
    out.insert(out.end(), body.begin(), body.end());
    be32(out, static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size()))));
  }

  int width_, height_, bit_depth_, color_type_;
  std::vector<std::uint8_t> palette_;
};

}  // namespace cadsynth::oracle
