#include "tsdm/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsdm/config.hpp"
#include "tsdm/maskgen.hpp"
#include "tsdm/rng.hpp"

namespace tsdm::synth {

namespace {

// rng stream tags
constexpr std::uint64_t kBackgroundStream = 0xB6;
constexpr std::uint64_t kDepthStreamBase = 0xD000;
constexpr std::uint64_t kDatasetStreamBase = 0x5A1100;

Rgb8 lerp_color(Rgb8 a, Rgb8 b, double t) {
  auto ch = [t](std::uint8_t x, std::uint8_t y) {
    return std::uint8_t(std::clamp(std::floor(x + (double(y) - x) * t + 0.5), 0.0, 255.0));
  };
  return Rgb8{ch(a.r, b.r), ch(a.g, b.g), ch(a.b, b.b)};
}

bool covers(const ObjectSpec& obj, const Box& box, double px, double py) {
  if (obj.shape == Shape::Rect)
    return px >= box.left && px < box.right() && py >= box.top && py < box.bottom();
  const double nx = (px - box.center_x()) / (0.5 * box.w);
  const double ny = (py - box.center_y()) / (0.5 * box.h);
  return nx * nx + ny * ny <= 1.0;
}

// Torus-wrapped value-noise lattice sampled in object-local coordinates.
struct ObjectTexture {
  static constexpr int kCells = 32;
  double amp = 0.0;
  double cell = 6.0;
  double grid[kCells][kCells][3];

  ObjectTexture(const ObjectSpec& obj, std::uint64_t seed) {
    amp = obj.texture_amp;
    cell = std::max(1.0, obj.texture_cell);
    Rng rng(seed);
    for (auto& row : grid)
      for (auto& px : row)
        for (double& v : px) v = rng.uniform(-1.0, 1.0);
  }

  void offsets(double fx, double fy, double out[3]) const {
    if (amp <= 0.0) {
      out[0] = out[1] = out[2] = 0.0;
      return;
    }
    const double gx = fx / cell;
    const double gy = fy / cell;
    const int x0 = int(std::floor(gx));
    const int y0 = int(std::floor(gy));
    const double ax = gx - x0;
    const double ay = gy - y0;
    auto wrap = [](int v) { return ((v % kCells) + kCells) % kCells; };
    const int xa = wrap(x0), xb = wrap(x0 + 1);
    const int ya = wrap(y0), yb = wrap(y0 + 1);
    for (int c = 0; c < 3; ++c) {
      const double v = (1 - ay) * ((1 - ax) * grid[ya][xa][c] + ax * grid[ya][xb][c]) +
                       ay * ((1 - ax) * grid[yb][xa][c] + ax * grid[yb][xb][c]);
      out[c] = amp * v;
    }
  }
};

// Smooth value-noise color field: a coarse random lattice, bilinearly
// interpolated, so correlation has structure to reject.
ColorRaster value_noise_background(int w, int h, std::uint64_t seed) {
  constexpr int kCell = 16;
  const int gw = w / kCell + 2;
  const int gh = h / kCell + 2;
  Rng rng(seed);
  std::vector<std::uint8_t> grid(std::size_t(gw) * gh * 3);
  for (auto& v : grid) v = std::uint8_t(rng.uniform_int(30, 225));

  ColorRaster out(w, h);
  for (int y = 0; y < h; ++y) {
    const double fy = double(y) / kCell;
    const int y0 = int(fy);
    const double ay = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = double(x) / kCell;
      const int x0 = int(fx);
      const double ax = fx - x0;
      std::uint8_t rgb[3];
      for (int c = 0; c < 3; ++c) {
        const double v00 = grid[(std::size_t(y0) * gw + x0) * 3 + c];
        const double v10 = grid[(std::size_t(y0) * gw + x0 + 1) * 3 + c];
        const double v01 = grid[(std::size_t(y0 + 1) * gw + x0) * 3 + c];
        const double v11 = grid[(std::size_t(y0 + 1) * gw + x0 + 1) * 3 + c];
        const double v = (1 - ay) * ((1 - ax) * v00 + ax * v10) +
                         ay * ((1 - ax) * v01 + ax * v11);
        rgb[c] = std::uint8_t(std::clamp(v, 0.0, 255.0));
      }
      out.set(x, y, Rgb8{rgb[0], rgb[1], rgb[2]});
    }
  }
  return out;
}

void draw_object(const ObjectSpec& obj, std::uint64_t texture_seed,
                 int frame_index, int frame_count, ColorRaster& color,
                 DepthRaster& depth, Rng& noise, double sigma) {
  const Box box = obj.box_at(frame_index);
  const IntRect r = intersect(rasterize(box), color.bounds());
  double t = 0.0;
  if (obj.color_end && frame_count > 1)
    t = double(frame_index - 1) / double(frame_count - 1);
  const Rgb8 c = obj.color_end ? lerp_color(obj.color, *obj.color_end, t) : obj.color;

  const ObjectTexture tex(obj, texture_seed);
  const double phase_x = obj.texture_drift_x * (frame_index - 1);
  const double phase_y = obj.texture_drift_y * (frame_index - 1);

  for (int y = r.y0; y < r.y1(); ++y) {
    for (int x = r.x0; x < r.x1(); ++x) {
      if (!covers(obj, box, x + 0.5, y + 0.5)) continue;
      double off[3];
      tex.offsets((x + 0.5) - box.left + phase_x, (y + 0.5) - box.top + phase_y, off);
      auto ch = [](double v) {
        return std::uint8_t(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      };
      color.set(x, y, Rgb8{ch(c.r + off[0]), ch(c.g + off[1]), ch(c.b + off[2])});
      const double d = std::max(0.001, obj.depth_m + noise.normal(0.0, sigma));
      depth.set_meters(x, y, d);
    }
  }
}

std::uint64_t object_texture_seed(const SceneSpec& spec, const ObjectSpec& obj,
                                  std::uint64_t ordinal) {
  return obj.texture_seed ? obj.texture_seed
                          : mix_seed(spec.seed, 0x7E00 + ordinal);
}

}  // namespace

void SceneSpec::validate() const {
  if (frame_w < 8 || frame_h < 8) throw std::invalid_argument("frame too small");
  if (frame_count < 1) throw std::invalid_argument("frame count must be >= 1");
  if (depth_noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
  if (background_depth_m <= 0.0) throw std::invalid_argument("background depth must be > 0");
  if (target.depth_m <= 0.0) throw std::invalid_argument("target depth must be > 0");
  if (target.w <= 0.0 || target.h <= 0.0)
    throw std::invalid_argument("target size must be positive");
  for (const auto& d : distractors)
    if (d.depth_m <= 0.0) throw std::invalid_argument("distractor depth must be > 0");

  const Box frame{0.0, 0.0, double(frame_w), double(frame_h)};
  for (int i = 1; i <= frame_count; ++i) {
    const Box b = target.box_at(i);
    const auto inter = intersection(b, frame);
    const double inside = inter ? inter->area() : 0.0;
    if (inside < 0.5 * b.area())
      throw std::invalid_argument("target leaves the frame beyond the 50% rule at frame " +
                                  std::to_string(i));
  }
}

Sequence render_sequence(const SceneSpec& spec) {
  spec.validate();

  const ColorRaster background =
      value_noise_background(spec.frame_w, spec.frame_h, mix_seed(spec.seed, kBackgroundStream));

  Sequence seq;
  for (int i = 1; i <= spec.frame_count; ++i) {
    RgbdFrame frame;
    frame.index = i;
    frame.color = background;
    frame.depth = DepthRaster(spec.frame_w, spec.frame_h);

    Rng noise(mix_seed(spec.seed, kDepthStreamBase + std::uint64_t(i)));
    for (int y = 0; y < spec.frame_h; ++y)
      for (int x = 0; x < spec.frame_w; ++x)
        frame.depth.set_meters(
            x, y, std::max(0.001, spec.background_depth_m +
                                      noise.normal(0.0, spec.depth_noise_sigma)));

    for (std::size_t d = 0; d < spec.distractors.size(); ++d)
      draw_object(spec.distractors[d],
                  object_texture_seed(spec, spec.distractors[d], d + 1), i,
                  spec.frame_count, frame.color, frame.depth, noise,
                  spec.depth_noise_sigma);
    // target drawn last: never occluded
    draw_object(spec.target, object_texture_seed(spec, spec.target, 0), i,
                spec.frame_count, frame.color, frame.depth, noise,
                spec.depth_noise_sigma);

    seq.frames.push_back(std::move(frame));
    seq.ground_truth.push_back(spec.target.box_at(i));
  }
  if (!spec.category.empty())
    seq.tags.assign(std::size_t(spec.frame_count), spec.category);
  return seq;
}

namespace {

Shape parse_shape(const std::string& s) {
  if (s == "rect") return Shape::Rect;
  if (s == "ellipse") return Shape::Ellipse;
  throw std::runtime_error("unknown shape '" + s + "' (expected rect|ellipse)");
}

Rgb8 parse_rgb(const std::vector<double>& v, const std::string& key) {
  if (v.size() != 3) throw std::runtime_error("key '" + key + "': expected r,g,b");
  for (double c : v)
    if (c < 0 || c > 255) throw std::runtime_error("key '" + key + "': channel out of range");
  return Rgb8{std::uint8_t(v[0]), std::uint8_t(v[1]), std::uint8_t(v[2])};
}

ObjectSpec parse_object(KeyValueFile& kv, const std::string& prefix) {
  ObjectSpec obj;
  obj.shape = parse_shape(kv.get_string(prefix + ".shape", "rect"));
  obj.color = parse_rgb(kv.get_double_list(prefix + ".color", {200, 60, 60}),
                        prefix + ".color");
  if (kv.has(prefix + ".color_end"))
    obj.color_end = parse_rgb(kv.get_double_list(prefix + ".color_end", {}),
                              prefix + ".color_end");
  obj.depth_m = kv.get_double(prefix + ".depth", obj.depth_m);
  const auto size = kv.get_double_list(prefix + ".size", {obj.w, obj.h});
  if (size.size() != 2) throw std::runtime_error("key '" + prefix + ".size': expected w,h");
  obj.w = size[0];
  obj.h = size[1];
  const auto start = kv.get_double_list(prefix + ".start", {obj.start_x, obj.start_y});
  if (start.size() != 2) throw std::runtime_error("key '" + prefix + ".start': expected x,y");
  obj.start_x = start[0];
  obj.start_y = start[1];
  const auto vel = kv.get_double_list(prefix + ".velocity", {0.0, 0.0});
  if (vel.size() != 2) throw std::runtime_error("key '" + prefix + ".velocity': expected vx,vy");
  obj.vx = vel[0];
  obj.vy = vel[1];
  obj.texture_amp = kv.get_double(prefix + ".texture_amp", obj.texture_amp);
  obj.texture_cell = kv.get_double(prefix + ".texture_cell", obj.texture_cell);
  const auto drift = kv.get_double_list(prefix + ".texture_drift", {0.0, 0.0});
  if (drift.size() != 2)
    throw std::runtime_error("key '" + prefix + ".texture_drift': expected dx,dy");
  obj.texture_drift_x = drift[0];
  obj.texture_drift_y = drift[1];
  obj.texture_seed = kv.get_u64(prefix + ".texture_seed", obj.texture_seed);
  return obj;
}

SceneSpec parse_scene(KeyValueFile kv) {
  SceneSpec spec;
  spec.frame_w = kv.get_int("frame_w", spec.frame_w);
  spec.frame_h = kv.get_int("frame_h", spec.frame_h);
  spec.frame_count = kv.get_int("frames", spec.frame_count);
  spec.seed = kv.get_u64("seed", spec.seed);
  spec.depth_noise_sigma = kv.get_double("noise_sigma", spec.depth_noise_sigma);
  spec.background_depth_m = kv.get_double("background_depth", spec.background_depth_m);
  spec.category = kv.get_string("category", "");
  spec.target = parse_object(kv, "target");
  for (int i = 1; kv.has("distractor" + std::to_string(i) + ".shape") ||
                  kv.has("distractor" + std::to_string(i) + ".depth");
       ++i)
    spec.distractors.push_back(parse_object(kv, "distractor" + std::to_string(i)));
  kv.reject_unknown();
  spec.validate();
  return spec;
}

}  // namespace

SceneSpec parse_scene_spec(const std::filesystem::path& file) {
  return parse_scene(KeyValueFile::parse(file));
}

SceneSpec parse_scene_spec_text(const std::string& text, const std::string& origin) {
  return parse_scene(KeyValueFile::parse_text(text, origin));
}

void AugmentSpec::validate() const {
  if (count_min < 1 || count_max < count_min)
    throw std::invalid_argument("rectangle count range invalid");
  if (!(frac_min > 0.0 && frac_min <= frac_max && frac_max < 1.0))
    throw std::invalid_argument("size fraction range invalid");
}

ColorRaster mg_augment(const ColorRaster& image, const Box& gt,
                       const AugmentSpec& spec) {
  spec.validate();
  const IntRect gt_rect = rasterize(gt);
  const IntRect bounds = image.bounds();
  if (intersect(gt_rect, bounds).w != gt_rect.w ||
      intersect(gt_rect, bounds).h != gt_rect.h)
    throw std::invalid_argument("target box must lie inside the image");

  const HsvColor avg = maskgen::average_target_color(image, gt);
  const maskgen::MaskColors colors = maskgen::select_mask_colors(avg);

  ColorRaster out = image;
  Rng rng(spec.seed);
  const int k = rng.uniform_int(spec.count_min, spec.count_max);
  int placed = 0;
  for (int i = 0; i < k; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const int rw = std::max(1, int(std::lround(rng.uniform(spec.frac_min, spec.frac_max) * image.width)));
      const int rh = std::max(1, int(std::lround(rng.uniform(spec.frac_min, spec.frac_max) * image.height)));
      if (rw >= image.width || rh >= image.height) continue;
      const int x = rng.uniform_int(0, image.width - rw);
      const int y = rng.uniform_int(0, image.height - rh);
      const IntRect rect{x, y, rw, rh};
      if (!intersect(rect, gt_rect).empty()) continue;
      const Rgb8 c = rng.coin() ? colors.c2 : colors.c1;
      for (int yy = y; yy < y + rh; ++yy)
        for (int xx = x; xx < x + rw; ++xx) out.set(xx, yy, c);
      ++placed;
      break;
    }
  }
  if (placed == 0)
    throw std::runtime_error("image too small to place any rectangle outside the target box");
  return out;
}

std::vector<refiner::TrainSample> make_refiner_dataset(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");

  std::vector<refiner::TrainSample> out;
  out.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, kDatasetStreamBase + std::uint64_t(i)));

    ObjectSpec target;
    target.shape = rng.coin() ? Shape::Ellipse : Shape::Rect;
    const HsvColor hsv{rng.uniform(0.0, 360.0), rng.uniform(0.4, 1.0),
                       rng.uniform(0.4, 1.0)};
    target.color = hsv_to_rgb(hsv);
    target.depth_m = rng.uniform(0.8, 2.5);
    target.w = rng.uniform(28.0, 70.0);
    target.h = rng.uniform(28.0, 70.0);
    target.texture_amp = rng.uniform(5.0, 30.0);
    target.texture_cell = rng.uniform(3.0, 9.0);

    const double ml = rng.uniform(0.05, 0.40) * target.w;
    const double mr = rng.uniform(0.05, 0.40) * target.w;
    const double mt = rng.uniform(0.05, 0.40) * target.h;
    const double mb = rng.uniform(0.05, 0.40) * target.h;
    const double crop_w = target.w + ml + mr;
    const double crop_h = target.h + mt + mb;

    SceneSpec scene;
    scene.frame_w = int(std::ceil(crop_w)) + rng.uniform_int(6, 40);
    scene.frame_h = int(std::ceil(crop_h)) + rng.uniform_int(6, 40);
    scene.frame_count = 1;
    scene.seed = rng.next_u64();
    scene.depth_noise_sigma = rng.uniform(0.005, 0.03);
    scene.background_depth_m = rng.uniform(3.5, 7.0);

    const double crop_left = rng.uniform(1.0, scene.frame_w - crop_w - 1.0);
    const double crop_top = rng.uniform(1.0, scene.frame_h - crop_h - 1.0);
    target.start_x = crop_left + ml;
    target.start_y = crop_top + mt;
    scene.target = target;

    const int clutter = rng.uniform_int(2, 5);
    for (int c = 0; c < clutter; ++c) {
      ObjectSpec d;
      d.shape = rng.coin() ? Shape::Ellipse : Shape::Rect;
      const HsvColor dh{rng.uniform(0.0, 360.0), rng.uniform(0.2, 1.0),
                        rng.uniform(0.3, 1.0)};
      d.color = hsv_to_rgb(dh);
      d.depth_m = rng.uniform(0.8, 7.0);
      d.w = rng.uniform(10.0, 50.0);
      d.h = rng.uniform(10.0, 50.0);
      d.texture_amp = rng.uniform(0.0, 25.0);
      d.start_x = rng.uniform(0.0, scene.frame_w - d.w);
      d.start_y = rng.uniform(0.0, scene.frame_h - d.h);
      scene.distractors.push_back(d);
    }

    const Sequence seq = render_sequence(scene);
    const RgbdFrame& frame = seq.frames.front();
    const Box requested{crop_left, crop_top, crop_w, crop_h};

    refiner::TrainSample sample;
    sample.input = refiner::prepare_input(frame.color, frame.depth, requested);

    // gt is normalized by the realized (integer-aligned) crop.
    const Box& crop = sample.input.crop_box;
    const Box tb = target.box_at(1);
    sample.gt.w = tb.w / crop.w;
    sample.gt.h = tb.h / crop.h;
    sample.gt.xr = (tb.right() - crop.left) / crop.w;
    sample.gt.yb = (tb.bottom() - crop.top) / crop.h;
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace tsdm::synth
