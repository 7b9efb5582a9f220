#include "tsdm/color.hpp"

#include <algorithm>
#include <cmath>

namespace tsdm {

double wrap_hue(double deg) {
  double h = std::fmod(deg, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h = 0.0;
  return h;
}

double hue_distance(double a_deg, double b_deg) {
  double d = std::fabs(wrap_hue(a_deg) - wrap_hue(b_deg));
  return d > 180.0 ? 360.0 - d : d;
}

HsvColor rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double rf = r / 255.0;
  const double gf = g / 255.0;
  const double bf = b / 255.0;
  const double mx = std::max({rf, gf, bf});
  const double mn = std::min({rf, gf, bf});
  const double delta = mx - mn;

  HsvColor out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h;
    if (mx == rf)
      h = 60.0 * ((gf - bf) / delta);
    else if (mx == gf)
      h = 60.0 * (2.0 + (bf - rf) / delta);
    else
      h = 60.0 * (4.0 + (rf - gf) / delta);
    out.h = wrap_hue(h);
  }
  return out;
}

namespace {

std::uint8_t to_channel(double f) {
  // round half-up
  double v = std::floor(f * 255.0 + 0.5);
  return std::uint8_t(std::clamp(v, 0.0, 255.0));
}

}  // namespace

Rgb8 hsv_to_rgb(const HsvColor& c) {
  const double h = wrap_hue(c.h) / 60.0;
  const int sector = int(h) % 6;
  const double f = h - std::floor(h);
  const double p = c.v * (1.0 - c.s);
  const double q = c.v * (1.0 - c.s * f);
  const double t = c.v * (1.0 - c.s * (1.0 - f));

  double r, g, b;
  switch (sector) {
    case 0: r = c.v; g = t; b = p; break;
    case 1: r = q; g = c.v; b = p; break;
    case 2: r = p; g = c.v; b = t; break;
    case 3: r = p; g = q; b = c.v; break;
    case 4: r = t; g = p; b = c.v; break;
    default: r = c.v; g = p; b = q; break;
  }
  return Rgb8{to_channel(r), to_channel(g), to_channel(b)};
}

}  // namespace tsdm
