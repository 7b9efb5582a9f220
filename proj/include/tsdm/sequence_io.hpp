#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tsdm/raster.hpp"

namespace tsdm {

// On-disk sequence layout:
//   color/%08d.png   8-bit RGB
//   depth/%08d.png   16-bit grayscale, millimeters
//   groundtruth.txt  one "left,top,w,h" line per frame
//   tags.txt         optional, one category token per frame
struct Sequence {
  std::vector<RgbdFrame> frames;
  std::vector<Box> ground_truth;
  std::vector<std::string> tags;  // empty when no tags.txt
};

ColorRaster load_color_png(const std::filesystem::path& file);
DepthRaster load_depth_png(const std::filesystem::path& file);
void save_color_png(const std::filesystem::path& file, const ColorRaster& img);
void save_depth_png(const std::filesystem::path& file, const DepthRaster& img);

// Also used for the per-frame rows of a results file.
Box parse_box_line(const std::string& line);

std::vector<Box> load_ground_truth(const std::filesystem::path& file);
std::vector<std::string> load_tags(const std::filesystem::path& file);

Sequence load_sequence(const std::filesystem::path& dir);
void write_sequence(const std::filesystem::path& dir, const Sequence& seq);

}  // namespace tsdm
