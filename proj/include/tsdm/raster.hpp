#pragma once

#include <cstdint>
#include <vector>

#include "tsdm/color.hpp"
#include "tsdm/geometry.hpp"

namespace tsdm {

// Depth rasters store millimeters on disk and in memory; math paths work in
// meters. A stored 0 means "missing".
inline constexpr double kMetersPerUnit = 1e-3;

// Row-major 8-bit RGB raster.
struct ColorRaster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // width*height*3, RGB triples

  ColorRaster() = default;
  ColorRaster(int w, int h);

  std::size_t offset(int x, int y) const {
    return (std::size_t(y) * width + x) * 3;
  }
  Rgb8 at(int x, int y) const {
    const std::size_t i = offset(x, y);
    return Rgb8{data[i], data[i + 1], data[i + 2]};
  }
  void set(int x, int y, Rgb8 c) {
    const std::size_t i = offset(x, y);
    data[i] = c.r;
    data[i + 1] = c.g;
    data[i + 2] = c.b;
  }
  bool same_size(const ColorRaster& o) const {
    return width == o.width && height == o.height;
  }
  IntRect bounds() const { return IntRect{0, 0, width, height}; }

  bool operator==(const ColorRaster&) const = default;
};

// Row-major 16-bit depth raster, millimeters, 0 = missing.
struct DepthRaster {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;

  DepthRaster() = default;
  DepthRaster(int w, int h);

  std::uint16_t at(int x, int y) const {
    return data[std::size_t(y) * width + x];
  }
  void set(int x, int y, std::uint16_t mm) {
    data[std::size_t(y) * width + x] = mm;
  }
  // Depth in meters; 0.0 when missing.
  double meters(int x, int y) const { return at(x, y) * kMetersPerUnit; }
  void set_meters(int x, int y, double m);
  IntRect bounds() const { return IntRect{0, 0, width, height}; }

  bool operator==(const DepthRaster&) const = default;
};

// Binary raster; 1 = keep.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h);

  std::uint8_t at(int x, int y) const {
    return data[std::size_t(y) * width + x];
  }
  void set(int x, int y, std::uint8_t v) {
    data[std::size_t(y) * width + x] = v;
  }

  bool operator==(const Mask&) const = default;
};

// Paired color and depth frame; dimensions always match.
struct RgbdFrame {
  ColorRaster color;
  DepthRaster depth;
  int index = 1;  // frame ordinal, 1-based
};

// Largest valid depth in the raster, meters; 0.0 when everything is missing.
double max_valid_depth_m(const DepthRaster& d);

// Pixel rectangle a crop of `box` covers: the outward-rounded footprint, or
// its intersection with the raster when clamp is set. Throws when the box
// misses the raster entirely.
IntRect crop_rect(int raster_w, int raster_h, const Box& box, bool clamp);

// Copies `rect` out of the source; pixels outside the source are zero.
ColorRaster extract(const ColorRaster& src, const IntRect& rect);
DepthRaster extract(const DepthRaster& src, const IntRect& rect);

ColorRaster crop(const ColorRaster& src, const Box& box, bool clamp);
DepthRaster crop(const DepthRaster& src, const Box& box, bool clamp);

enum class ResizeMode { Bilinear, Nearest };

// Color defaults to bilinear, depth to nearest-neighbor so no depth values
// are invented at object boundaries.
ColorRaster resize(const ColorRaster& src, int out_w, int out_h,
                   ResizeMode mode = ResizeMode::Bilinear);
DepthRaster resize(const DepthRaster& src, int out_w, int out_h,
                   ResizeMode mode = ResizeMode::Nearest);

}  // namespace tsdm
