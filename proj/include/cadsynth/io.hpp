#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cadsynth {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Throws AssetMissing when the file does not exist, IoFailure otherwise.
Bytes read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames over the target.
void write_file(const std::filesystem::path& path, ByteView data);
void write_file(const std::filesystem::path& path, std::string_view text);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// 1-based line number of a byte offset; used to point at JSON errors.
std::size_t line_of_offset(std::string_view text, std::size_t offset);

}  // namespace cadsynth
