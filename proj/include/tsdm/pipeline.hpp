#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsdm/coretrk.hpp"
#include "tsdm/maskgen.hpp"
#include "tsdm/mgfsm.hpp"
#include "tsdm/refiner.hpp"
#include "tsdm/sequence_io.hpp"

namespace tsdm::pipeline {

// Every tunable across the modules. Defaults follow the reference parameter
// settings (mu1 0.65, mu2 0.55, mu3 0.92, gamma 1% of frame max depth,
// alpha1 0.7, alpha2 0.1).
struct RunConfig {
  mgfsm::StrategyParams strategy;
  double alpha1 = 0.7;
  double alpha2 = 0.1;
  double search_scale = 2.0;
  int cell = 8;
  int core_k = 8;
  std::vector<double> core_scales{0.95, 1.0, 1.05};
  int mask_colors = 2;  // 1 = single-color background mask
  std::uint64_t seed = 1;
  std::string weights_path;
  bool enable_mg = true;
  bool enable_dr = true;

  void validate() const;
};

// Flat key=value file; the TSDM_SEED environment variable overrides the
// configured seed.
RunConfig load_run_config(const std::filesystem::path& file);
RunConfig apply_env_seed(RunConfig cfg);

// Per-sequence memory carried between frames.
struct TrackState {
  core::Template tpl;
  Box prev_box;
  double prev_dt = 0.0;  // meters
  mgfsm::MgStatus mg_status;
  maskgen::MaskColors mask_colors;
  RunConfig cfg;
};

struct FrameDiagnostics {
  double score = 0.0;
  mgfsm::MgStatus mg_after;
  double dt = 0.0;
  bool masked = false;
  bool coasted = false;
};

// Captures the intermediate images of one step, for mask dumps and tests.
struct StepDebug {
  bool has_mask = false;
  Mask m;
  ColorRaster mc;
  ColorRaster xc;   // unmasked search crop
  ColorRaster fed;  // image actually handed to the core
};

TrackState init(const RgbdFrame& first_frame, const Box& gt, const RunConfig& cfg);

// One tracking step. Frame-level failures leave the state untouched and
// repeat the previous box (coast rule).
Box step_frame(TrackState& state, const RgbdFrame& frame,
               const core::CoreTracker& core, const refiner::RefinerModel* model,
               FrameDiagnostics* diag = nullptr, StepDebug* debug = nullptr);

struct TrackRunResult {
  std::vector<Box> boxes;
  std::vector<double> scores;
  std::vector<mgfsm::State> states;
  double seconds = 0.0;  // init + steps, I/O excluded
  double fps = 0.0;
};

TrackRunResult run_track(const Sequence& seq, const RunConfig& cfg,
                         const core::CoreTracker& core,
                         const refiner::RefinerModel* model,
                         const std::filesystem::path* dump_dir = nullptr);

// One line per frame: left,top,w,h,score,mg_state
void write_results(const std::filesystem::path& file, const TrackRunResult& result);

struct ResultLine {
  Box box;
  double score = 0.0;
  std::string mg_state;
};

std::vector<ResultLine> read_results(const std::filesystem::path& file);

}  // namespace tsdm::pipeline
