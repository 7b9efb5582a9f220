#include "tsdm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsdm {

IntRect rasterize(const Box& b) {
  const int x0 = int(std::floor(b.left));
  const int y0 = int(std::floor(b.top));
  const int x1 = int(std::ceil(b.right()));
  const int y1 = int(std::ceil(b.bottom()));
  return IntRect{x0, y0, x1 - x0, y1 - y0};
}

IntRect intersect(const IntRect& a, const IntRect& b) {
  const int x0 = std::max(a.x0, b.x0);
  const int y0 = std::max(a.y0, b.y0);
  const int x1 = std::min(a.x1(), b.x1());
  const int y1 = std::min(a.y1(), b.y1());
  return IntRect{x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

Box union_bounds(const Box& a, const Box& b) {
  const double x0 = std::min(a.left, b.left);
  const double y0 = std::min(a.top, b.top);
  const double x1 = std::max(a.right(), b.right());
  const double y1 = std::max(a.bottom(), b.bottom());
  return Box::from_corners(x0, y0, x1, y1);
}

std::optional<Box> intersection(const Box& a, const Box& b) {
  const double x0 = std::max(a.left, b.left);
  const double y0 = std::max(a.top, b.top);
  const double x1 = std::min(a.right(), b.right());
  const double y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return Box::from_corners(x0, y0, x1, y1);
}

Box translate(const Box& b, double dx, double dy) {
  return Box{b.left + dx, b.top + dy, b.w, b.h};
}

Box clip_to_frame(const Box& b, double frame_w, double frame_h) {
  auto clipped = intersection(b, Box{0.0, 0.0, frame_w, frame_h});
  if (!clipped) throw std::invalid_argument("box lies fully outside the frame");
  return *clipped;
}

}  // namespace tsdm
