#include "cadsynth/io.hpp"

#include <fstream>
#include <iterator>
#include <system_error>

#include "cadsynth/error.hpp"

namespace cadsynth {

Bytes read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw AssetMissing("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoFailure("read error on " + path.string());
  return data;
}

std::string read_text_file(const std::filesystem::path& path) {
  const Bytes data = read_file(path);
  return std::string(data.begin(), data.end());
}

void write_file(const std::filesystem::path& path, ByteView data) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoFailure("write error on " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_file(const std::filesystem::path& path, std::string_view text) { write_file(path, as_bytes(text)); }

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace cadsynth
