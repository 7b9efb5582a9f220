#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsdm/geometry.hpp"

namespace tsdm::eval {

// 101 thresholds: 0.00, 0.01, ..., 1.00.
inline constexpr int kCurvePoints = 101;

inline double curve_threshold(int i) { return i / 100.0; }

struct SequenceResult {
  std::vector<Box> boxes;      // per-frame predictions
  std::vector<double> ious;    // per-frame overlap with ground truth
  double seconds = 0.0;        // tracking loop wall clock, I/O excluded
  double fps = 0.0;
};

double iou(const Box& a, const Box& b);

// ratio[i] = fraction of frames with IOU strictly above curve_threshold(i).
std::vector<double> success_curve(const std::vector<double>& ious);

// Arithmetic mean of the curve over the grid.
double auc(const std::vector<double>& curve);

struct CategoryRow {
  std::string category;
  double mean_iou = 0.0;
  std::size_t frames = 0;
};

struct CategoryReport {
  std::vector<CategoryRow> rows;  // sorted by category name
  double overall = 0.0;           // frame-weighted mean over all frames
  std::size_t total_frames = 0;
};

// Tags align 1:1 with each result's frames; empty or missing tags collect
// under "untagged".
CategoryReport category_report(const std::vector<SequenceResult>& results,
                               const std::vector<std::vector<std::string>>& tags);

std::string format_report_text(const CategoryReport& report);
std::string format_report_csv(const CategoryReport& report);
std::string format_curve(const std::vector<double>& curve);

double measure_fps(std::size_t frames, double seconds);

}  // namespace tsdm::eval
