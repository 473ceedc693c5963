#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cadsynth/bbox.hpp"

namespace cadsynth {

struct Detection {
  std::string image;  // image file stem
  std::string class_name;
  BBox box;
  double score = 0;

  bool operator==(const Detection&) const = default;
};

// JSON Lines, one {"image","class","bbox":[xmin,ymin,xmax,ymax],"score"} per
// line, half-open pixel boxes. Non-integral coordinates round to the nearest
// integer. Blank lines are skipped. Throws MalformedDetections naming the
// 1-based line.
std::vector<Detection> parse_detections(std::string_view text);

std::string write_detections(const std::vector<Detection>& detections);

}  // namespace cadsynth
