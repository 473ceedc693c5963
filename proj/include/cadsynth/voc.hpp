#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cadsynth/bbox.hpp"

namespace cadsynth {

struct AnnotatedObject {
  std::string name;
  BBox box;
  bool difficult = false;

  bool operator==(const AnnotatedObject&) const = default;
};

struct Annotation {
  std::string filename;
  int width = 0;
  int height = 0;
  int depth = 3;
  std::vector<AnnotatedObject> objects;

  bool operator==(const Annotation&) const = default;
};

// Internal half-open boxes become 1-based inclusive VOC integers:
// (xmin + 1, ymin + 1, xmax, ymax).
std::string write_voc_xml(const Annotation& annotation);

// Accepts the emitted subset plus the usual extra VOC fields. Surrounding
// whitespace in text fields is trimmed. Throws MalformedAnnotation.
Annotation parse_voc_xml(std::string_view xml);

// Ground truth keyed by annotation file stem. `dir` is either a dataset root
// (containing annotations/) or a directory of .xml files. Throws
// MalformedAnnotation (naming the file) and IoFailure; an empty directory is
// a MalformedAnnotation.
std::map<std::string, Annotation> load_ground_truth(const std::filesystem::path& dir);

}  // namespace cadsynth
