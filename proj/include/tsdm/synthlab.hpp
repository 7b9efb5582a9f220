#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsdm/refiner.hpp"
#include "tsdm/sequence_io.hpp"

namespace tsdm::synth {

enum class Shape { Rect, Ellipse };

struct ObjectSpec {
  Shape shape = Shape::Rect;
  Rgb8 color{200, 60, 60};
  std::optional<Rgb8> color_end;  // linear per-frame ramp when set
  double depth_m = 1.5;
  double w = 24.0, h = 18.0;
  double start_x = 20.0, start_y = 20.0;
  double vx = 0.0, vy = 0.0;  // px/frame

  // Object-local value-noise texture; moves with the object. amp 0 renders a
  // flat color (degenerate for correlation, useful for closed-form checks).
  double texture_amp = 0.0;   // per-channel amplitude, intensity units
  double texture_cell = 6.0;  // noise cell size, local px
  // Texture-space shift per frame: gradual appearance change. A second
  // object with the same texture_seed and zero drift is a pixel-exact clone
  // of this object's first-frame appearance.
  double texture_drift_x = 0.0;
  double texture_drift_y = 0.0;
  std::uint64_t texture_seed = 0;  // 0 = derived from the object's ordinal

  Box box_at(int frame_index) const {  // 1-based
    return Box{start_x + (frame_index - 1) * vx, start_y + (frame_index - 1) * vy,
               w, h};
  }
};

struct SceneSpec {
  int frame_w = 160, frame_h = 120;
  int frame_count = 30;
  std::uint64_t seed = 1;
  double depth_noise_sigma = 0.01;   // meters
  double background_depth_m = 5.0;
  std::string category;              // written to tags.txt when non-empty
  ObjectSpec target;
  std::vector<ObjectSpec> distractors;

  void validate() const;
};

// Deterministic per seed. Background is seeded value-noise; objects carry
// their depth plus gaussian noise; distractors draw first so the target is
// never occluded; ground truth is the exact target box.
Sequence render_sequence(const SceneSpec& spec);

SceneSpec parse_scene_spec(const std::filesystem::path& file);
SceneSpec parse_scene_spec_text(const std::string& text, const std::string& origin);

// Rectangle clutter painted outside the target box in the two mask colors
// derived from the target's average color.
struct AugmentSpec {
  int count_min = 3, count_max = 8;
  double frac_min = 0.05, frac_max = 0.25;  // per-side size range
  std::uint64_t seed = 1;

  void validate() const;
};

ColorRaster mg_augment(const ColorRaster& image, const Box& gt,
                       const AugmentSpec& spec);

// Training crops honoring the containment assumption: every crop strictly
// contains the target box with a 5-40% random margin per side.
std::vector<refiner::TrainSample> make_refiner_dataset(int n, std::uint64_t seed);

}  // namespace tsdm::synth
