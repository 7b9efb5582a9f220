#include "tsdm/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace tsdm::eval {

double iou(const Box& a, const Box& b) {
  const auto inter = intersection(a, b);
  if (!inter) return 0.0;
  const double ia = inter->area();
  return ia / (a.area() + b.area() - ia);
}

std::vector<double> success_curve(const std::vector<double>& ious) {
  if (ious.empty()) throw std::invalid_argument("success curve needs at least one IOU");
  std::vector<double> curve(kCurvePoints);
  for (int i = 0; i < kCurvePoints; ++i) {
    const double t = curve_threshold(i);
    std::size_t above = 0;
    for (double v : ious)
      if (v > t) ++above;
    curve[i] = double(above) / double(ious.size());
  }
  return curve;
}

double auc(const std::vector<double>& curve) {
  if (curve.empty()) throw std::invalid_argument("empty curve");
  double sum = 0.0;
  for (double v : curve) sum += v;
  return sum / double(curve.size());
}

CategoryReport category_report(const std::vector<SequenceResult>& results,
                               const std::vector<std::vector<std::string>>& tags) {
  if (!tags.empty() && tags.size() != results.size())
    throw std::invalid_argument("tag lists must align with results");

  std::map<std::string, std::pair<double, std::size_t>> acc;
  double total = 0.0;
  std::size_t frames = 0;
  for (std::size_t s = 0; s < results.size(); ++s) {
    const auto& ious = results[s].ious;
    for (std::size_t f = 0; f < ious.size(); ++f) {
      std::string tag = "untagged";
      if (s < tags.size() && f < tags[s].size() && !tags[s][f].empty())
        tag = tags[s][f];
      auto& slot = acc[tag];
      slot.first += ious[f];
      slot.second += 1;
      total += ious[f];
      ++frames;
    }
  }

  CategoryReport report;
  report.total_frames = frames;
  report.overall = frames ? total / double(frames) : 0.0;
  for (const auto& [name, slot] : acc)
    report.rows.push_back(CategoryRow{name, slot.first / double(slot.second), slot.second});
  return report;
}

std::string format_report_text(const CategoryReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %12s %8s\n", "category", "mean IOU", "frames");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %12.4f %8zu\n", "overall",
                report.overall, report.total_frames);
  out += buf;
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%-16s %12.4f %8zu\n", row.category.c_str(),
                  row.mean_iou, row.frames);
    out += buf;
  }
  return out;
}

std::string format_report_csv(const CategoryReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "overall,%.6f,%zu\n", report.overall,
                report.total_frames);
  out += buf;
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%zu\n", row.category.c_str(),
                  row.mean_iou, row.frames);
    out += buf;
  }
  return out;
}

std::string format_curve(const std::vector<double>& curve) {
  std::string out = "# threshold,ratio (grid 0.00..1.00 step 0.01, IOU > t)\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f,%.6f\n", curve_threshold(int(i)), curve[i]);
    out += buf;
  }
  return out;
}

double measure_fps(std::size_t frames, double seconds) {
  if (frames == 0) throw std::invalid_argument("no frames processed");
  constexpr double kMinDuration = 1e-6;  // guard against zero elapsed
  return double(frames) / std::max(seconds, kMinDuration);
}

}  // namespace tsdm::eval
