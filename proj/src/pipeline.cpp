#include "tsdm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tsdm/config.hpp"
#include "tsdm/evalkit.hpp"
#include "tsdm/rng.hpp"

namespace tsdm::pipeline {

void RunConfig::validate() const {
  strategy.validate();
  if (!(alpha1 > 0.0 && alpha1 <= 1.0))
    throw std::invalid_argument("alpha1 must lie in (0,1]");
  if (alpha2 <= 0.0) throw std::invalid_argument("alpha2 must be > 0");
  if (search_scale <= 1.0) throw std::invalid_argument("search_scale must be > 1");
  if (cell < 1) throw std::invalid_argument("cell must be >= 1");
  if (core_k < 1) throw std::invalid_argument("core_k must be >= 1");
  if (mask_colors != 1 && mask_colors != 2)
    throw std::invalid_argument("mask_colors must be 1 or 2");
  if (core_scales.empty()) throw std::invalid_argument("core_scales must not be empty");
  for (double s : core_scales)
    if (s <= 0.0) throw std::invalid_argument("core scales must be > 0");
}

RunConfig apply_env_seed(RunConfig cfg) {
  if (const char* env = std::getenv("TSDM_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw std::runtime_error("TSDM_SEED must be an unsigned integer");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  KeyValueFile kv = KeyValueFile::parse(file);
  RunConfig cfg;
  cfg.strategy.mu1 = kv.get_double("mu1", cfg.strategy.mu1);
  cfg.strategy.mu2 = kv.get_double("mu2", cfg.strategy.mu2);
  cfg.strategy.mu3 = kv.get_double("mu3", cfg.strategy.mu3);
  cfg.strategy.gamma_frac = kv.get_double("gamma_frac", cfg.strategy.gamma_frac);
  cfg.alpha1 = kv.get_double("alpha1", cfg.alpha1);
  cfg.alpha2 = kv.get_double("alpha2", cfg.alpha2);
  cfg.search_scale = kv.get_double("search_scale", cfg.search_scale);
  cfg.cell = kv.get_int("cell", cfg.cell);
  cfg.core_k = kv.get_int("core_k", cfg.core_k);
  cfg.core_scales = kv.get_double_list("core_scales", cfg.core_scales);
  cfg.mask_colors = kv.get_int("mask_colors", cfg.mask_colors);
  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.weights_path = kv.get_string("weights", cfg.weights_path);
  cfg.enable_mg = kv.get_bool("enable_mg", cfg.enable_mg);
  cfg.enable_dr = kv.get_bool("enable_dr", cfg.enable_dr);
  kv.reject_unknown();
  cfg = apply_env_seed(std::move(cfg));
  cfg.validate();
  return cfg;
}

TrackState init(const RgbdFrame& first_frame, const Box& gt, const RunConfig& cfg) {
  cfg.validate();
  if (gt.left < 0.0 || gt.top < 0.0 || gt.right() > first_frame.color.width ||
      gt.bottom() > first_frame.color.height)
    throw std::invalid_argument("initial box must lie inside the frame");

  TrackState state;
  state.cfg = cfg;
  state.tpl.patch = crop(first_frame.color, gt, /*clamp=*/true);
  state.tpl.origin_box = gt;
  state.prev_box = gt;
  state.prev_dt = maskgen::mean_target_depth(first_frame.depth, gt);
  state.mask_colors =
      maskgen::select_mask_colors(maskgen::average_target_color(first_frame.color, gt));
  state.mg_status = {mgfsm::State::Active, mgfsm::Reason::Unchanged};
  return state;
}

namespace {

// Widen the search rect so the largest template scale fits; extract()
// zero-fills anything past the frame border.
IntRect ensure_core_fit(IntRect rect, const core::Template& tpl,
                        const std::vector<double>& scales) {
  int need_w = 1, need_h = 1;
  for (double s : scales) {
    need_w = std::max(need_w, int(std::lround(tpl.patch.width * s)));
    need_h = std::max(need_h, int(std::lround(tpl.patch.height * s)));
  }
  if (rect.w < need_w) {
    const int grow = need_w - rect.w;
    rect.x0 -= grow / 2;
    rect.w = need_w;
  }
  if (rect.h < need_h) {
    const int grow = need_h - rect.h;
    rect.y0 -= grow / 2;
    rect.h = need_h;
  }
  return rect;
}

}  // namespace

Box step_frame(TrackState& state, const RgbdFrame& frame,
               const core::CoreTracker& core, const refiner::RefinerModel* model,
               FrameDiagnostics* diag, StepDebug* debug) {
  const RunConfig& cfg = state.cfg;
  try {
    // step 1: search region and (when active) the background mask
    const core::SearchRegion region = core::make_search_region(
        state.prev_box, frame.color.width, frame.color.height, cfg.search_scale);
    IntRect rect = crop_rect(frame.color.width, frame.color.height, region.window,
                             /*clamp=*/true);
    rect = ensure_core_fit(rect, state.tpl, cfg.core_scales);

    const ColorRaster xc = extract(frame.color, rect);
    const DepthRaster xd = extract(frame.depth, rect);

    const bool mask_on =
        cfg.enable_mg && state.mg_status.state == mgfsm::State::Active;
    ColorRaster xm;
    maskgen::MaskPair pair;
    if (mask_on) {
      const Box prev_local = translate(state.prev_box, -rect.x0, -rect.y0);
      pair = maskgen::make_mask_pair(xd, state.prev_dt, prev_local,
                                     state.mask_colors, cfg.cell,
                                     mix_seed(cfg.seed, std::uint64_t(frame.index)),
                                     cfg.mask_colors);
      xm = maskgen::apply_mask(xc, pair);
    } else {
      xm = xc;
    }

    // step 2: the core proposes scored candidates on the (masked) crop
    const auto candidates = core.track(state.tpl, xm, rect.to_box());
    if (candidates.empty())
      throw std::runtime_error("core tracker returned no candidates");
    const double score = candidates.front().score;
    const Box bs = candidates.front().box;

    // step 3: depth refinement
    Box bd = bs;
    if (cfg.enable_dr) {
      if (!model) throw std::runtime_error("depth refiner enabled without weights");
      bd = refiner::refine(candidates, frame.color, frame.depth, *model,
                           cfg.alpha1, cfg.alpha2)
               .box;
    }

    // state update: depth re-estimated from the output box; kept on failure
    double dt_now = state.prev_dt;
    try {
      dt_now = maskgen::mean_target_depth(frame.depth, bd);
    } catch (const std::exception&) {
      dt_now = state.prev_dt;
    }
    const mgfsm::MgStatus next_status =
        mgfsm::step(state.mg_status, score, dt_now, state.prev_dt,
                    max_valid_depth_m(frame.depth), cfg.strategy);

    if (debug) {
      debug->has_mask = mask_on;
      if (mask_on) {
        debug->m = pair.m;
        debug->mc = pair.mc;
      }
      debug->xc = xc;
      debug->fed = xm;
    }

    state.mg_status = next_status;
    state.prev_box = bd;
    state.prev_dt = dt_now;
    if (diag) {
      diag->score = score;
      diag->mg_after = next_status;
      diag->dt = dt_now;
      diag->masked = mask_on;
      diag->coasted = false;
    }
    return bd;
  } catch (const std::exception&) {
    if (diag) {
      diag->score = 0.0;
      diag->mg_after = state.mg_status;
      diag->dt = state.prev_dt;
      diag->masked = false;
      diag->coasted = true;
    }
    return state.prev_box;  // coast: state untouched
  }
}

namespace {

ColorRaster mask_to_image(const Mask& m) {
  ColorRaster out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      const std::uint8_t v = m.at(x, y) ? 255 : 0;
      out.set(x, y, Rgb8{v, v, v});
    }
  return out;
}

std::string dump_name(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%08d.png", prefix, index);
  return buf;
}

}  // namespace

TrackRunResult run_track(const Sequence& seq, const RunConfig& cfg,
                         const core::CoreTracker& core,
                         const refiner::RefinerModel* model,
                         const std::filesystem::path* dump_dir) {
  if (seq.frames.empty()) throw std::invalid_argument("empty sequence");
  if (seq.frames.size() != seq.ground_truth.size())
    throw std::invalid_argument("ground-truth count differs from frame count");
  if (cfg.enable_dr && !model)
    throw std::invalid_argument("depth refiner enabled but no model supplied");
  if (dump_dir) std::filesystem::create_directories(*dump_dir);

  TrackRunResult result;
  const auto t0 = std::chrono::steady_clock::now();

  TrackState state = init(seq.frames.front(), seq.ground_truth.front(), cfg);
  result.boxes.push_back(state.prev_box);
  result.scores.push_back(1.0);
  result.states.push_back(state.mg_status.state);

  for (std::size_t i = 1; i < seq.frames.size(); ++i) {
    FrameDiagnostics diag;
    StepDebug debug;
    const Box bd = step_frame(state, seq.frames[i], core, model, &diag,
                              dump_dir ? &debug : nullptr);
    result.boxes.push_back(bd);
    result.scores.push_back(diag.score);
    result.states.push_back(diag.mg_after.state);

    if (dump_dir && debug.has_mask) {
      save_color_png(*dump_dir / dump_name("m", seq.frames[i].index),
                     mask_to_image(debug.m));
      save_color_png(*dump_dir / dump_name("mc", seq.frames[i].index), debug.mc);
      save_color_png(*dump_dir / dump_name("xm", seq.frames[i].index), debug.fed);
    }
  }

  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.fps = eval::measure_fps(seq.frames.size(), result.seconds);
  return result;
}

void write_results(const std::filesystem::path& file, const TrackRunResult& result) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open results file " + file.string());
  char buf[256];
  for (std::size_t i = 0; i < result.boxes.size(); ++i) {
    const Box& b = result.boxes[i];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%s\n", b.left, b.top,
                  b.w, b.h, result.scores[i], mgfsm::to_string(result.states[i]));
    out << buf;
  }
}

std::vector<ResultLine> read_results(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open results file " + file.string());
  std::vector<ResultLine> lines;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                               ": expected left,top,w,h,score,mg_state");
    try {
      ResultLine rl;
      rl.box = Box{std::stod(fields[0]), std::stod(fields[1]), std::stod(fields[2]),
                   std::stod(fields[3])};
      rl.score = std::stod(fields[4]);
      rl.mg_state = fields[5];
      lines.push_back(std::move(rl));
    } catch (const std::exception&) {
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                               ": malformed numeric field");
    }
  }
  if (lines.empty()) throw std::runtime_error(file.string() + ": no result lines");
  return lines;
}

}  // namespace tsdm::pipeline
