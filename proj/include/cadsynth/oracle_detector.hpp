#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cadsynth/detections.hpp"
#include "cadsynth/voc.hpp"

namespace cadsynth {

// Stand-in detector that re-emits ground truth. Each object is dropped with
// probability drop_rate; survivors have every coordinate shifted by a uniform
// integer in [-jitter, jitter] (kept inside the image and non-degenerate) and
// carry `score`. drop_rate = 0, jitter = 0 is the echo oracle.
struct NoiseModel {
  double drop_rate = 0;
  int jitter = 0;
  double score = 1.0;
};

std::vector<Detection> oracle_detections(const std::map<std::string, Annotation>& ground_truth,
                                         const NoiseModel& noise, std::uint64_t seed);

}  // namespace cadsynth
