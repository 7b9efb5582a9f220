#include "tsdm/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsdm/rng.hpp"

namespace tsdm::maskgen {

int otsu_threshold(const std::vector<std::uint64_t>& histogram) {
  const int bins = int(histogram.size());
  int nonzero = 0;
  double total = 0.0;
  double weighted = 0.0;
  for (int i = 0; i < bins; ++i) {
    if (histogram[i] > 0) ++nonzero;
    total += double(histogram[i]);
    weighted += double(i) * double(histogram[i]);
  }
  if (nonzero < 2)
    throw std::invalid_argument("otsu: histogram needs at least two populated bins");

  double w0 = 0.0;
  double sum0 = 0.0;
  double best = -1.0;
  int best_t = -1;
  for (int t = 1; t < bins; ++t) {
    w0 += double(histogram[t - 1]);
    sum0 += double(t - 1) * double(histogram[t - 1]);
    if (w0 == 0.0) continue;
    const double w1 = total - w0;
    if (w1 == 0.0) break;
    const double mu0 = sum0 / w0;
    const double mu1 = (weighted - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

namespace {

constexpr int kDepthBins = 256;

int depth_bin(double d, double lo, double hi) {
  return std::min(kDepthBins - 1, int((d - lo) / (hi - lo) * kDepthBins));
}

}  // namespace

double mean_target_depth(const DepthRaster& depth, const Box& box) {
  const IntRect r = intersect(rasterize(box), depth.bounds());
  if (r.empty()) throw std::invalid_argument("depth box lies outside the raster");

  std::vector<double> vals;
  vals.reserve(std::size_t(r.w) * r.h);
  for (int y = r.y0; y < r.y1(); ++y)
    for (int x = r.x0; x < r.x1(); ++x) {
      const double d = depth.meters(x, y);
      if (d > 0.0) vals.push_back(d);
    }
  if (vals.empty()) throw std::runtime_error("no valid depth inside the box");

  double lo = vals[0], hi = vals[0], sum = 0.0;
  for (double d : vals) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    sum += d;
  }
  if (lo == hi) return sum / double(vals.size());  // degenerate: plain mean

  std::vector<std::uint64_t> hist(kDepthBins, 0);
  for (double d : vals) ++hist[depth_bin(d, lo, hi)];

  const int t = otsu_threshold(hist);
  double near_sum = 0.0;
  std::size_t near_n = 0;
  for (double d : vals) {
    if (depth_bin(d, lo, hi) < t) {
      near_sum += d;
      ++near_n;
    }
  }
  // Bins below the threshold are populated by construction (bin 0 holds lo),
  // and they form the class with the smaller mean.
  return near_sum / double(near_n);
}

Mask binary_mask(const DepthRaster& depth, double dt_prev_m, const Box& prev_box) {
  if (dt_prev_m <= 0.0) throw std::invalid_argument("previous target depth must be > 0");

  Mask m(depth.width, depth.height);
  const double cx = prev_box.center_x();
  const double cy = prev_box.center_y();
  const double win_x = 0.75 * prev_box.w;
  const double win_y = 0.75 * prev_box.h;
  const double lo = dt_prev_m / 2.0;
  const double hi = 2.0 * dt_prev_m;

  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double d = depth.meters(x, y);
      bool keep = d > lo && d < hi;  // missing depth (0) always fails
      if (!keep) {
        keep = std::abs((x + 0.5) - cx) < win_x && std::abs((y + 0.5) - cy) < win_y;
      }
      m.set(x, y, keep ? 1 : 0);
    }
  }
  return m;
}

HsvColor average_target_color(const ColorRaster& color, const Box& box) {
  const IntRect r = intersect(rasterize(box), color.bounds());
  if (r.empty()) throw std::invalid_argument("color box lies outside the raster");

  constexpr double kDegToRad = 0.017453292519943295;
  double vx = 0.0, vy = 0.0, s_sum = 0.0, v_sum = 0.0;
  std::size_t n = 0;
  for (int y = r.y0; y < r.y1(); ++y)
    for (int x = r.x0; x < r.x1(); ++x) {
      const Rgb8 px = color.at(x, y);
      const HsvColor hsv = rgb_to_hsv(px.r, px.g, px.b);
      vx += hsv.s * std::cos(hsv.h * kDegToRad);
      vy += hsv.s * std::sin(hsv.h * kDegToRad);
      s_sum += hsv.s;
      v_sum += hsv.v;
      ++n;
    }

  HsvColor out;
  out.s = s_sum / double(n);
  out.v = v_sum / double(n);
  if (vx != 0.0 || vy != 0.0)
    out.h = wrap_hue(std::atan2(vy, vx) / kDegToRad);
  return out;  // hue 0 by convention when fully achromatic
}

MaskColors select_mask_colors(const HsvColor& avg_target) {
  MaskColors out;
  out.source_hue = wrap_hue(avg_target.h);
  out.c1_hsv = HsvColor{wrap_hue(avg_target.h + 120.0), 1.0, 0.7};
  out.c2_hsv = HsvColor{wrap_hue(avg_target.h + 240.0), 1.0, 0.7};
  out.c1 = hsv_to_rgb(out.c1_hsv);
  out.c2 = hsv_to_rgb(out.c2_hsv);
  return out;
}

ColorRaster color_mask(const Mask& m, const MaskColors& colors, int cell,
                       std::uint64_t seed, int n_colors) {
  if (cell < 1) throw std::invalid_argument("cell size must be >= 1");
  if (n_colors < 1 || n_colors > 2)
    throw std::invalid_argument("n_colors must be 1 or 2");

  ColorRaster out(m.width, m.height);
  Rng rng(seed);
  const int tiles_x = (m.width + cell - 1) / cell;
  const int tiles_y = (m.height + cell - 1) / cell;
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const Rgb8 c = (n_colors == 2 && rng.coin()) ? colors.c2 : colors.c1;
      const int x1 = std::min(m.width, (tx + 1) * cell);
      const int y1 = std::min(m.height, (ty + 1) * cell);
      for (int y = ty * cell; y < y1; ++y)
        for (int x = tx * cell; x < x1; ++x)
          if (m.at(x, y) == 0) out.set(x, y, c);
    }
  }
  return out;
}

ColorRaster apply_mask(const ColorRaster& xc, const MaskPair& pair) {
  if (!xc.same_size(pair.mc) || xc.width != pair.m.width || xc.height != pair.m.height)
    throw std::invalid_argument("mask pair dimensions do not match the image");

  ColorRaster out(xc.width, xc.height);
  for (int y = 0; y < xc.height; ++y)
    for (int x = 0; x < xc.width; ++x)
      out.set(x, y, pair.m.at(x, y) ? xc.at(x, y) : pair.mc.at(x, y));
  return out;
}

MaskPair make_mask_pair(const DepthRaster& xd, double dt_prev_m,
                        const Box& prev_box, const MaskColors& colors,
                        int cell, std::uint64_t seed, int n_colors) {
  MaskPair pair;
  pair.m = binary_mask(xd, dt_prev_m, prev_box);
  pair.mc = color_mask(pair.m, colors, cell, seed, n_colors);
  return pair;
}

}  // namespace tsdm::maskgen
