#pragma once

#include <cmath>

namespace shiptrack {

/// Inclusive integer pixel rectangle.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

/// Axis-aligned region of interest, subpixel center, half extents in pixels.
struct TrackingBox {
  double center_x = 0.0;
  double center_y = 0.0;
  double half_width = 25.0;
  double half_height = 25.0;

  bool degenerate() const { return !(half_width > 0.0) || !(half_height > 0.0); }

  /// Pixels whose centers lie within the box after rounding the edges to the
  /// nearest pixel; a box with center 5 and half extent 1 spans pixels 4..6.
  PixelRect pixels() const {
    return PixelRect{static_cast<int>(std::floor(center_x - half_width + 0.5)),
                     static_cast<int>(std::floor(center_y - half_height + 0.5)),
                     static_cast<int>(std::floor(center_x + half_width + 0.5)),
                     static_cast<int>(std::floor(center_y + half_height + 0.5))};
  }

  bool inside(int width, int height) const {
    const PixelRect r = pixels();
    return r.x0 >= 0 && r.y0 >= 0 && r.x1 <= width - 1 && r.y1 <= height - 1;
  }
};

}  // namespace shiptrack
