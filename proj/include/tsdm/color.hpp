#pragma once

#include <cstdint>

namespace tsdm {

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb8&) const = default;
};

// Hexcone HSV. h in [0, 360) degrees, s and v in [0, 1].
struct HsvColor {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

HsvColor rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Inverse hexcone conversion, channels rounded half-up.
Rgb8 hsv_to_rgb(const HsvColor& c);

// Wraps any angle into [0, 360).
double wrap_hue(double deg);

// Shortest circular distance between two hues, in [0, 180].
double hue_distance(double a_deg, double b_deg);

}  // namespace tsdm
