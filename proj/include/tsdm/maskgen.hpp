#pragma once

#include <cstdint>
#include <vector>

#include "tsdm/color.hpp"
#include "tsdm/geometry.hpp"
#include "tsdm/raster.hpp"

namespace tsdm::maskgen {

// Binary keep-mask plus the color replacement image for one search region.
// Pixels with m = 1 keep the original color; pixels with m = 0 take the
// corresponding mc pixel.
struct MaskPair {
  Mask m;
  ColorRaster mc;
};

// The two background replacement colors. Both sit 120 degrees away from the
// target's average hue (and from each other) with full saturation and 70%
// value. The exact HSV definitions are kept alongside the quantized RGB
// triples used for painting.
struct MaskColors {
  Rgb8 c1;
  Rgb8 c2;
  HsvColor c1_hsv;
  HsvColor c2_hsv;
  double source_hue = 0.0;
};

// Threshold T splits bins into {i < T} and {i >= T}; returns the T in
// [1, bins-1] maximizing the between-class variance, smallest T on ties.
// Throws when fewer than two bins are populated.
int otsu_threshold(const std::vector<std::uint64_t>& histogram);

// Mean depth (meters) of the near cluster inside `box`: valid depths are
// split by Otsu over a 256-bin histogram spanning [min, max] and the class
// with the smaller mean is averaged. Falls back to the plain mean when the
// histogram is degenerate. Throws when the box contains no valid depth.
double mean_target_depth(const DepthRaster& depth, const Box& box);

// Keep-mask over the search region: a pixel survives when its depth lies in
// (dt_prev/2, 2*dt_prev), or when it falls inside the 1.5w x 1.5h window
// around the previous box center. Missing depth fails the depth test.
Mask binary_mask(const DepthRaster& depth, double dt_prev_m, const Box& prev_box);

// Saturation-weighted circular mean of hue plus arithmetic means of S and V
// over the pixels inside `box`. Achromatic regions report hue 0.
HsvColor average_target_color(const ColorRaster& color, const Box& box);

MaskColors select_mask_colors(const HsvColor& avg_target);

// Tiles the raster into cell x cell squares, assigns each tile c1 or c2 by a
// seeded coin (row-major tile order, one draw per tile) and zeroes every
// pixel the mask keeps. n_colors = 1 paints everything c1 for the
// single-color comparison.
ColorRaster color_mask(const Mask& m, const MaskColors& colors, int cell,
                       std::uint64_t seed, int n_colors = 2);

// Per-pixel select: xc where m = 1, mc elsewhere.
ColorRaster apply_mask(const ColorRaster& xc, const MaskPair& pair);

MaskPair make_mask_pair(const DepthRaster& xd, double dt_prev_m,
                        const Box& prev_box, const MaskColors& colors,
                        int cell, std::uint64_t seed, int n_colors = 2);

}  // namespace tsdm::maskgen
