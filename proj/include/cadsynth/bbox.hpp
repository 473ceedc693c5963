#pragma once

#include <cstdint>

namespace cadsynth {

// Axis-aligned pixel box, half-open: [xmin, xmax) x [ymin, ymax).
struct BBox {
  int xmin = 0;
  int ymin = 0;
  int xmax = 0;
  int ymax = 0;

  constexpr int width() const { return xmax - xmin; }
  constexpr int height() const { return ymax - ymin; }
  constexpr std::int64_t area() const {
    return non_degenerate() ? static_cast<std::int64_t>(width()) * height() : 0;
  }
  constexpr bool non_degenerate() const { return xmin < xmax && ymin < ymax; }
  constexpr bool fits(int image_width, int image_height) const {
    return 0 <= xmin && xmin < xmax && xmax <= image_width && 0 <= ymin && ymin < ymax &&
           ymax <= image_height;
  }

  constexpr bool operator==(const BBox&) const = default;
};

}  // namespace cadsynth
