#include "cadsynth/oracle_detector.hpp"

#include <algorithm>

#include "cadsynth/rng.hpp"

namespace cadsynth {

std::vector<Detection> oracle_detections(const std::map<std::string, Annotation>& ground_truth,
                                         const NoiseModel& noise, std::uint64_t seed) {
  std::vector<Detection> out;
  for (const auto& [image, ann] : ground_truth) {
    Rng rng = Rng::stream(seed, {Rng::hash_tag(image)}, "oracle");
    for (const AnnotatedObject& o : ann.objects) {
      if (rng.uniform() < noise.drop_rate) continue;
      BBox b = o.box;
      if (noise.jitter > 0) {
        const auto j = [&] { return static_cast<int>(rng.uniform_int(-noise.jitter, noise.jitter)); };
        BBox s{b.xmin + j(), b.ymin + j(), b.xmax + j(), b.ymax + j()};
        s.xmin = std::clamp(s.xmin, 0, ann.width);
        s.xmax = std::clamp(s.xmax, 0, ann.width);
        s.ymin = std::clamp(s.ymin, 0, ann.height);
        s.ymax = std::clamp(s.ymax, 0, ann.height);
        if (s.non_degenerate()) b = s;
      }
      out.push_back({image, o.name, b, noise.score});
    }
  }
  return out;
}

}  // namespace cadsynth
