#pragma once

#include <memory>
#include <vector>

#include "tsdm/geometry.hpp"
#include "tsdm/raster.hpp"

namespace tsdm::core {

struct ScoredBox {
  Box box;            // frame coordinates
  double score = 0.0; // confidence in [0, 1]
};

// Target appearance from the first frame; fixed for the whole sequence.
struct Template {
  ColorRaster patch;
  Box origin_box;
};

struct SearchRegion {
  Box window;          // frame coordinates, centered on the previous box
  double scale = 2.0;  // window-to-previous-box size ratio
};

// Previous box inflated about its center and clipped to the frame.
SearchRegion make_search_region(const Box& prev_box, int frame_w, int frame_h,
                                double scale);

// Core tracker contract: map (template, search raster) to at least one
// scored candidate, pure per call. `search_origin` places the search
// raster's (0,0) pixel in frame coordinates.
class CoreTracker {
 public:
  virtual ~CoreTracker() = default;
  virtual std::vector<ScoredBox> track(const Template& tpl,
                                       const ColorRaster& search,
                                       const Box& search_origin) const = 0;
};

// Reference core: zero-mean normalized cross-correlation of per-channel
// mean-subtracted intensities, swept over a small scale set. Scores map ncc
// from [-1,1] to [0,1]; zero-variance windows score 0.5.
class NccCore : public CoreTracker {
 public:
  struct Options {
    std::vector<double> scales{0.95, 1.0, 1.05};
    int k = 8;  // candidates returned
  };

  NccCore() = default;
  explicit NccCore(Options opt);

  std::vector<ScoredBox> track(const Template& tpl, const ColorRaster& search,
                               const Box& search_origin) const override;

  const Options& options() const { return opt_; }

 private:
  Options opt_;
};

}  // namespace tsdm::core
