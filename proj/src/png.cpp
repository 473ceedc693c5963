#include <png.h>

#include <csetjmp>
#include <cstring>
#include <string>

#include "cadsynth/error.hpp"
#include "cadsynth/image.hpp"

namespace cadsynth {
namespace {

struct ReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

struct ErrorSink {
  char message[256];
};

void on_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::strncpy(sink->message, msg, sizeof(sink->message) - 1);
  sink->message[sizeof(sink->message) - 1] = '\0';
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->size) png_error(png, "unexpected end of PNG stream");
  std::memcpy(out, cur->data + cur->offset, length);
  cur->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

// Only trivially destructible state lives in this frame, so longjmp out of
// libpng is safe. Returns false with sink->message set on failure.
bool decode_into(ByteView bytes, int& width, int& height, std::uint8_t* (*alloc)(void*, std::size_t), void* alloc_ctx,
                 ErrorSink* sink) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, sink, on_error, on_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  ReadCursor cursor{bytes.data(), bytes.size(), 0};
  png_bytep* rows = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    png_free(png, rows);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) png_error(png, "unsupported PNG layout");

  width = static_cast<int>(w);
  height = static_cast<int>(h);
  std::uint8_t* pixels = alloc(alloc_ctx, static_cast<std::size_t>(w) * h * 3);
  rows = static_cast<png_bytep*>(png_malloc(png, sizeof(png_bytep) * h));
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  png_free(png, rows);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_into(Bytes* out, int width, int height, int channels, const std::uint8_t* pixels, int level,
                 ErrorSink* sink) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, sink, on_error, on_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, write_callback, flush_callback);
  png_set_compression_level(png, level);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * width * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

Bytes encode(int width, int height, int channels, const std::uint8_t* pixels, std::size_t size, int level) {
  if (width < 1 || height < 1 || size != static_cast<std::size_t>(width) * height * channels)
    throw Error("encode_png: pixel buffer does not match dimensions");
  Bytes out;
  ErrorSink sink{};
  if (!encode_into(&out, width, height, channels, pixels, level, &sink))
    throw IoFailure(std::string("PNG encode failed: ") + sink.message);
  return out;
}

}  // namespace

RgbImage decode_png(ByteView bytes) {
  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
    throw MalformedTexture("not a PNG stream");
  RgbImage image;
  ErrorSink sink{};
  auto alloc = [](void* ctx, std::size_t n) -> std::uint8_t* {
    auto* img = static_cast<RgbImage*>(ctx);
    img->pixels.assign(n, 0);
    return img->pixels.data();
  };
  int w = 0, h = 0;
  if (!decode_into(bytes, w, h, alloc, &image, &sink))
    throw MalformedTexture(std::string("PNG decode failed: ") + (sink.message[0] ? sink.message : "out of memory"));
  if (w < 1 || h < 1) throw MalformedTexture("PNG has zero size");
  image.width = w;
  image.height = h;
  return image;
}

Bytes encode_png(const RgbImage& image, int compression_level) {
  return encode(image.width, image.height, 3, image.pixels.data(), image.pixels.size(), compression_level);
}

Bytes encode_png_gray(int width, int height, const std::vector<std::uint8_t>& gray, int compression_level) {
  return encode(width, height, 1, gray.data(), gray.size(), compression_level);
}

}  // namespace cadsynth
