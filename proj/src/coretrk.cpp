#include "tsdm/coretrk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsdm::core {

SearchRegion make_search_region(const Box& prev_box, int frame_w, int frame_h,
                                double scale) {
  if (scale <= 1.0) throw std::invalid_argument("search scale must be > 1");
  const Box inflated = Box::from_center(prev_box.center_x(), prev_box.center_y(),
                                        prev_box.w * scale, prev_box.h * scale);
  return SearchRegion{clip_to_frame(inflated, frame_w, frame_h), scale};
}

NccCore::NccCore(Options opt) : opt_(std::move(opt)) {
  if (opt_.scales.empty()) throw std::invalid_argument("scale set must not be empty");
  if (opt_.k < 1) throw std::invalid_argument("candidate count must be >= 1");
}

namespace {

struct Candidate {
  double score;
  int scale_idx;
  int y;
  int x;
  int w;
  int h;
};

// Per-channel summed-area tables over the search raster.
struct Integrals {
  int w, h;
  std::vector<double> sum;   // 3 channels, (w+1)*(h+1) each
  std::vector<double> sum2;

  explicit Integrals(const ColorRaster& img) : w(img.width), h(img.height) {
    const std::size_t plane = std::size_t(w + 1) * (h + 1);
    sum.assign(plane * 3, 0.0);
    sum2.assign(plane * 3, 0.0);
    for (int c = 0; c < 3; ++c) {
      double* s = sum.data() + plane * c;
      double* s2 = sum2.data() + plane * c;
      for (int y = 0; y < h; ++y) {
        double row = 0.0, row2 = 0.0;
        for (int x = 0; x < w; ++x) {
          const double v = img.data[img.offset(x, y) + c];
          row += v;
          row2 += v * v;
          const std::size_t i = std::size_t(y + 1) * (w + 1) + (x + 1);
          s[i] = s[i - (w + 1)] + row;
          s2[i] = s2[i - (w + 1)] + row2;
        }
      }
    }
  }

  double window_sum(int c, int x, int y, int ww, int hh, const double* base) const {
    const double* s = base + std::size_t(w + 1) * (h + 1) * c;
    const std::size_t stride = w + 1;
    return s[std::size_t(y + hh) * stride + (x + ww)] -
           s[std::size_t(y) * stride + (x + ww)] -
           s[std::size_t(y + hh) * stride + x] +
           s[std::size_t(y) * stride + x];
  }
};

}  // namespace

std::vector<ScoredBox> NccCore::track(const Template& tpl,
                                      const ColorRaster& search,
                                      const Box& search_origin) const {
  if (tpl.patch.width < 1 || tpl.patch.height < 1)
    throw std::invalid_argument("empty template");

  const double min_scale = *std::min_element(opt_.scales.begin(), opt_.scales.end());
  {
    const int min_w = std::max(1, int(std::lround(tpl.patch.width * min_scale)));
    const int min_h = std::max(1, int(std::lround(tpl.patch.height * min_scale)));
    if (min_w > search.width || min_h > search.height)
      throw std::invalid_argument("template larger than the search region");
  }

  const Integrals tables(search);
  std::vector<Candidate> all;

  for (int si = 0; si < int(opt_.scales.size()); ++si) {
    const double s = opt_.scales[si];
    const int tw = std::max(1, int(std::lround(tpl.patch.width * s)));
    const int th = std::max(1, int(std::lround(tpl.patch.height * s)));
    if (tw > search.width || th > search.height) continue;

    const ColorRaster scaled =
        (tw == tpl.patch.width && th == tpl.patch.height)
            ? tpl.patch
            : resize(tpl.patch, tw, th, ResizeMode::Bilinear);

    // Mean-subtract the template per channel.
    const std::size_t n = std::size_t(tw) * th;
    std::vector<double> t0(n * 3);
    double tnorm2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0;
      for (std::size_t p = 0; p < n; ++p) mean += scaled.data[p * 3 + c];
      mean /= double(n);
      double* tc = t0.data() + n * c;
      for (std::size_t p = 0; p < n; ++p) {
        tc[p] = scaled.data[p * 3 + c] - mean;
        tnorm2 += tc[p] * tc[p];
      }
    }
    const double tnorm = std::sqrt(tnorm2);

    for (int y = 0; y + th <= search.height; ++y) {
      for (int x = 0; x + tw <= search.width; ++x) {
        double ncc = 0.0;
        if (tnorm > 0.0) {
          // Numerator: sum_c sum_p t0 * window. The template is zero-mean per
          // channel, so the window mean cancels.
          double cross = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double* tc = t0.data() + n * c;
            for (int ty = 0; ty < th; ++ty) {
              const std::uint8_t* row = &search.data[search.offset(x, y + ty) + c];
              const double* trow = tc + std::size_t(ty) * tw;
              double acc = 0.0;
              for (int tx = 0; tx < tw; ++tx) acc += trow[tx] * row[std::size_t(tx) * 3];
              cross += acc;
            }
          }
          double wvar = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double ws = tables.window_sum(c, x, y, tw, th, tables.sum.data());
            const double ws2 = tables.window_sum(c, x, y, tw, th, tables.sum2.data());
            wvar += ws2 - ws * ws / double(n);
          }
          if (wvar > 0.0) ncc = std::clamp(cross / (tnorm * std::sqrt(wvar)), -1.0, 1.0);
        }
        all.push_back(Candidate{(ncc + 1.0) / 2.0, si, y, x, tw, th});
      }
    }
  }

  const std::size_t k = std::min<std::size_t>(opt_.k, all.size());
  std::partial_sort(all.begin(), all.begin() + k, all.end(),
                    [](const Candidate& a, const Candidate& b) {
                      if (a.score != b.score) return a.score > b.score;
                      if (a.scale_idx != b.scale_idx) return a.scale_idx < b.scale_idx;
                      if (a.y != b.y) return a.y < b.y;
                      return a.x < b.x;
                    });

  std::vector<ScoredBox> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Candidate& c = all[i];
    out.push_back(ScoredBox{Box{search_origin.left + c.x, search_origin.top + c.y,
                                double(c.w), double(c.h)},
                            c.score});
  }
  return out;
}

}  // namespace tsdm::core
