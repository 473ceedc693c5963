#include <gtest/gtest.h>

#include "cadsynth/error.hpp"
#include "cadsynth/image.hpp"
#include "oracles/png_builder.hpp"

namespace cadsynth {
namespace {

using oracle::PngBuilder;

TEST(PngDecode, TwoByTwoRgbKnownPixels) {
  const std::vector<std::uint8_t> px = {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30};
  const RgbImage img = decode_png(PngBuilder(2, 2, 8, 2).build(px));
  EXPECT_EQ(img.width, 2);
  EXPECT_EQ(img.height, 2);
  EXPECT_EQ(img.pixels, px);
}

TEST(PngDecode, OneWhitePixel) {
  const RgbImage img = decode_png(PngBuilder(1, 1, 8, 2).build({255, 255, 255}));
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{255, 255, 255}));
}

TEST(PngDecode, OtherColorTypes) {
  EXPECT_EQ(decode_png(PngBuilder(2, 1, 8, 0).build({7, 200})).pixels,
            (std::vector<std::uint8_t>{7, 7, 7, 200, 200, 200}));
  EXPECT_EQ(decode_png(PngBuilder(1, 1, 8, 4).build({9, 0})).pixels, (std::vector<std::uint8_t>{9, 9, 9}));
  EXPECT_EQ(decode_png(PngBuilder(1, 1, 8, 6).build({1, 2, 3, 0})).pixels, (std::vector<std::uint8_t>{1, 2, 3}));
  EXPECT_EQ(decode_png(PngBuilder(1, 1, 16, 2).build({0xab, 0x01, 0xcd, 0x02, 0xef, 0x03})).pixels,
            (std::vector<std::uint8_t>{0xab, 0xcd, 0xef}));
  EXPECT_EQ(decode_png(PngBuilder(2, 1, 8, 3).palette({0, 0, 0, 40, 50, 60}).build({1, 0})).pixels,
            (std::vector<std::uint8_t>{40, 50, 60, 0, 0, 0}));
}

TEST(PngDecode, TruncatedStreamIsMalformed) {
  Bytes png = PngBuilder(4, 4, 8, 2).build(std::vector<std::uint8_t>(48, 9));
  png.resize(png.size() / 2);
  EXPECT_THROW(decode_png(png), MalformedTexture);
  EXPECT_THROW(decode_png(Bytes{}), MalformedTexture);
  EXPECT_THROW(decode_png(Bytes{'n', 'o', 't', 'p', 'n', 'g', 0, 0, 0}), MalformedTexture);
}

TEST(PngEncode, RoundTrip) {
  RgbImage img(5, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 17);
  EXPECT_EQ(decode_png(encode_png(img)), img);
  EXPECT_EQ(decode_png(encode_png(img, 9)), img);

  const std::vector<std::uint8_t> gray = {0, 64, 128, 255};
  const RgbImage g = decode_png(encode_png_gray(2, 2, gray));
  EXPECT_EQ(g.pixels, (std::vector<std::uint8_t>{0, 0, 0, 64, 64, 64, 128, 128, 128, 255, 255, 255}));
}

}  // namespace
}  // namespace cadsynth
