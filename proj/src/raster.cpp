#include "tsdm/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsdm {

namespace {

void check_dims(int w, int h) {
  if (w < 1 || h < 1) throw std::invalid_argument("raster dimensions must be >= 1");
}

}  // namespace

ColorRaster::ColorRaster(int w, int h) : width(w), height(h) {
  check_dims(w, h);
  data.assign(std::size_t(w) * h * 3, 0);
}

DepthRaster::DepthRaster(int w, int h) : width(w), height(h) {
  check_dims(w, h);
  data.assign(std::size_t(w) * h, 0);
}

Mask::Mask(int w, int h) : width(w), height(h) {
  check_dims(w, h);
  data.assign(std::size_t(w) * h, 0);
}

void DepthRaster::set_meters(int x, int y, double m) {
  double mm = std::round(m / kMetersPerUnit);
  set(x, y, std::uint16_t(std::clamp(mm, 0.0, 65535.0)));
}

double max_valid_depth_m(const DepthRaster& d) {
  std::uint16_t mx = 0;
  for (std::uint16_t v : d.data) mx = std::max(mx, v);
  return mx * kMetersPerUnit;
}

IntRect crop_rect(int raster_w, int raster_h, const Box& box, bool clamp) {
  if (!box.valid()) throw std::invalid_argument("crop box has non-positive extent");
  const IntRect full{0, 0, raster_w, raster_h};
  IntRect r = rasterize(box);
  if (intersect(r, full).empty())
    throw std::invalid_argument("crop box lies fully outside the raster");
  if (clamp) r = intersect(r, full);
  return r;
}

namespace {

template <typename RasterT>
RasterT extract_impl(const RasterT& src, const IntRect& rect, int channels) {
  RasterT out(rect.w, rect.h);
  const IntRect valid = intersect(rect, IntRect{0, 0, src.width, src.height});
  for (int y = valid.y0; y < valid.y1(); ++y) {
    const auto* s = &src.data[(std::size_t(y) * src.width + valid.x0) * channels];
    auto* d = &out.data[(std::size_t(y - rect.y0) * rect.w + (valid.x0 - rect.x0)) * channels];
    std::copy(s, s + std::size_t(valid.w) * channels, d);
  }
  return out;
}

}  // namespace

ColorRaster extract(const ColorRaster& src, const IntRect& rect) {
  return extract_impl(src, rect, 3);
}

DepthRaster extract(const DepthRaster& src, const IntRect& rect) {
  return extract_impl(src, rect, 1);
}

ColorRaster crop(const ColorRaster& src, const Box& box, bool clamp) {
  return extract(src, crop_rect(src.width, src.height, box, clamp));
}

DepthRaster crop(const DepthRaster& src, const Box& box, bool clamp) {
  return extract(src, crop_rect(src.width, src.height, box, clamp));
}

namespace {

void check_out_dims(int w, int h) {
  if (w < 1 || h < 1) throw std::invalid_argument("resize target must be >= 1x1");
}

// Half-pixel-center sample coordinate for output pixel i.
inline double sample_coord(int i, int out_n, int in_n) {
  return (i + 0.5) * double(in_n) / double(out_n) - 0.5;
}

}  // namespace

ColorRaster resize(const ColorRaster& src, int out_w, int out_h, ResizeMode mode) {
  check_out_dims(out_w, out_h);
  ColorRaster out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      if (mode == ResizeMode::Nearest) {
        const int sx = std::clamp(int(std::floor((x + 0.5) * src.width / double(out_w))), 0, src.width - 1);
        const int sy = std::clamp(int(std::floor((y + 0.5) * src.height / double(out_h))), 0, src.height - 1);
        out.set(x, y, src.at(sx, sy));
        continue;
      }
      const double fx = sample_coord(x, out_w, src.width);
      const double fy = sample_coord(y, out_h, src.height);
      const int x0 = std::clamp(int(std::floor(fx)), 0, src.width - 1);
      const int y0 = std::clamp(int(std::floor(fy)), 0, src.height - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double ax = std::clamp(fx - x0, 0.0, 1.0);
      const double ay = std::clamp(fy - y0, 0.0, 1.0);
      std::uint8_t rgb[3];
      for (int c = 0; c < 3; ++c) {
        const double v00 = src.data[src.offset(x0, y0) + c];
        const double v10 = src.data[src.offset(x1, y0) + c];
        const double v01 = src.data[src.offset(x0, y1) + c];
        const double v11 = src.data[src.offset(x1, y1) + c];
        const double v = (1 - ay) * ((1 - ax) * v00 + ax * v10) +
                         ay * ((1 - ax) * v01 + ax * v11);
        rgb[c] = std::uint8_t(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
      out.set(x, y, Rgb8{rgb[0], rgb[1], rgb[2]});
    }
  }
  return out;
}

DepthRaster resize(const DepthRaster& src, int out_w, int out_h, ResizeMode mode) {
  check_out_dims(out_w, out_h);
  DepthRaster out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      if (mode == ResizeMode::Nearest) {
        const int sx = std::clamp(int(std::floor((x + 0.5) * src.width / double(out_w))), 0, src.width - 1);
        const int sy = std::clamp(int(std::floor((y + 0.5) * src.height / double(out_h))), 0, src.height - 1);
        out.set(x, y, src.at(sx, sy));
        continue;
      }
      // Bilinear depth is only meaningful for synthetic data without holes.
      const double fx = sample_coord(x, out_w, src.width);
      const double fy = sample_coord(y, out_h, src.height);
      const int x0 = std::clamp(int(std::floor(fx)), 0, src.width - 1);
      const int y0 = std::clamp(int(std::floor(fy)), 0, src.height - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double ax = std::clamp(fx - x0, 0.0, 1.0);
      const double ay = std::clamp(fy - y0, 0.0, 1.0);
      const double v = (1 - ay) * ((1 - ax) * src.at(x0, y0) + ax * src.at(x1, y0)) +
                       ay * ((1 - ax) * src.at(x0, y1) + ax * src.at(x1, y1));
      out.set(x, y, std::uint16_t(std::clamp(std::floor(v + 0.5), 0.0, 65535.0)));
    }
  }
  return out;
}

}  // namespace tsdm
