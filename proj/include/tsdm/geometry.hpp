#pragma once

#include <optional>

namespace tsdm {

// Axis-aligned rectangle in continuous (subpixel) frame coordinates.
struct Box {
  double left = 0.0;
  double top = 0.0;
  double w = 1.0;
  double h = 1.0;

  double right() const { return left + w; }
  double bottom() const { return top + h; }
  double center_x() const { return left + 0.5 * w; }
  double center_y() const { return top + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  static Box from_corners(double x0, double y0, double x1, double y1) {
    return Box{x0, y0, x1 - x0, y1 - y0};
  }
  static Box from_center(double cx, double cy, double bw, double bh) {
    return Box{cx - 0.5 * bw, cy - 0.5 * bh, bw, bh};
  }
};

// Integer pixel rectangle covering [x0, x0+w) x [y0, y0+h).
struct IntRect {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  int x1() const { return x0 + w; }
  int y1() const { return y0 + h; }
  bool empty() const { return w <= 0 || h <= 0; }

  Box to_box() const {
    return Box{double(x0), double(y0), double(w), double(h)};
  }
};

// Pixel footprint of a continuous box: left/top rounded down,
// right/bottom rounded up.
IntRect rasterize(const Box& b);

IntRect intersect(const IntRect& a, const IntRect& b);

Box union_bounds(const Box& a, const Box& b);
std::optional<Box> intersection(const Box& a, const Box& b);

Box translate(const Box& b, double dx, double dy);

// Intersects with [0, frame_w] x [0, frame_h]; throws if nothing remains.
Box clip_to_frame(const Box& b, double frame_w, double frame_h);

}  // namespace tsdm
