#include "cadsynth/detections.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cadsynth/error.hpp"

namespace cadsynth {

using nlohmann::json;

namespace {

int coordinate(const json& v, std::size_t line) {
  if (!v.is_number()) throw MalformedDetections(fmt::format("line {}: bbox entries must be numbers", line));
  const double d = v.get<double>();
  if (!std::isfinite(d) || std::abs(d) > std::numeric_limits<int>::max() / 2)
    throw MalformedDetections(fmt::format("line {}: bbox coordinate out of range", line));
  return static_cast<int>(std::lround(d));
}

std::string string_field(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw MalformedDetections(fmt::format("line {}: missing string field '{}'", line, key));
  return it->get<std::string>();
}

}  // namespace

std::vector<Detection> parse_detections(std::string_view text) {
  std::vector<Detection> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedDetections(fmt::format("line {}: invalid JSON ({})", line_no, e.what()));
    }
    if (!j.is_object()) throw MalformedDetections(fmt::format("line {}: expected a JSON object", line_no));
    Detection d;
    d.image = string_field(j, "image", line_no);
    d.class_name = string_field(j, "class", line_no);
    const auto bbox = j.find("bbox");
    if (bbox == j.end() || !bbox->is_array() || bbox->size() != 4)
      throw MalformedDetections(fmt::format("line {}: 'bbox' must be [xmin, ymin, xmax, ymax]", line_no));
    d.box = {coordinate((*bbox)[0], line_no), coordinate((*bbox)[1], line_no), coordinate((*bbox)[2], line_no),
             coordinate((*bbox)[3], line_no)};
    if (!d.box.non_degenerate()) throw MalformedDetections(fmt::format("line {}: degenerate bbox", line_no));
    const auto score = j.find("score");
    if (score == j.end() || !score->is_number())
      throw MalformedDetections(fmt::format("line {}: missing numeric 'score'", line_no));
    d.score = score->get<double>();
    if (!(d.score >= 0.0 && d.score <= 1.0))
      throw MalformedDetections(fmt::format("line {}: score {} outside [0, 1]", line_no, d.score));
    out.push_back(std::move(d));
  }
  return out;
}

std::string write_detections(const std::vector<Detection>& detections) {
  std::string out;
  for (const Detection& d : detections) {
    const json j = {{"image", d.image},
                    {"class", d.class_name},
                    {"bbox", {d.box.xmin, d.box.ymin, d.box.xmax, d.box.ymax}},
                    {"score", d.score}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cadsynth
