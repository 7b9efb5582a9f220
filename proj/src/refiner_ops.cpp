#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tsdm/evalkit.hpp"
#include "tsdm/refiner.hpp"

namespace tsdm::refiner {

Box nms_merge(const std::vector<core::ScoredBox>& candidates, double alpha1) {
  if (candidates.empty())
    throw std::invalid_argument("cannot merge an empty candidate list");

  const core::ScoredBox* top = &candidates.front();
  for (const auto& c : candidates)
    if (c.score > top->score) top = &c;  // ties keep the first

  Box merged = top->box;
  for (const auto& c : candidates)
    if (eval::iou(c.box, top->box) >= alpha1) merged = union_bounds(merged, c.box);
  return merged;
}

Box amplify(const Box& box, double alpha2, double frame_w, double frame_h) {
  if (alpha2 <= 0.0) throw std::invalid_argument("alpha2 must be > 0");
  const Box big = Box::from_center(box.center_x(), box.center_y(),
                                   box.w * (1.0 + alpha2), box.h * (1.0 + alpha2));
  return clip_to_frame(big, frame_w, frame_h);
}

RefinerInput prepare_input(const ColorRaster& xc, const DepthRaster& xd,
                           const Box& crop_box) {
  if (xc.width != xd.width || xc.height != xd.height)
    throw std::invalid_argument("color/depth dimensions differ");

  const IntRect rect = crop_rect(xc.width, xc.height, crop_box, /*clamp=*/true);
  const ColorRaster cc = resize(extract(xc, rect), kInputSide, kInputSide,
                                ResizeMode::Bilinear);
  const DepthRaster dc = resize(extract(xd, rect), kInputSide, kInputSide,
                                ResizeMode::Nearest);
  const double norm = max_valid_depth_m(xd);

  RefinerInput in;
  in.crop_box = rect.to_box();
  in.color.resize(3, kInputSide, kInputSide);
  in.depth.resize(3, kInputSide, kInputSide);
  for (int y = 0; y < kInputSide; ++y) {
    for (int x = 0; x < kInputSide; ++x) {
      const Rgb8 px = cc.at(x, y);
      in.color.at(0, y, x) = px.r / 255.0;
      in.color.at(1, y, x) = px.g / 255.0;
      in.color.at(2, y, x) = px.b / 255.0;
      const double d = norm > 0.0 ? dc.meters(x, y) / norm : 0.0;
      in.depth.at(0, y, x) = d;
      in.depth.at(1, y, x) = d;
      in.depth.at(2, y, x) = d;
    }
  }
  return in;
}

Box denormalize_output(const RefinerOutput& out, const Box& crop_box) {
  // Shrink w/h to xr/yb so the implied box cannot leave the crop.
  const double w = std::min(out.w, out.xr);
  const double h = std::min(out.h, out.yb);
  const double right = crop_box.left + out.xr * crop_box.w;
  const double bottom = crop_box.top + out.yb * crop_box.h;
  return Box{right - w * crop_box.w, bottom - h * crop_box.h,
             w * crop_box.w, h * crop_box.h};
}

RefineResult refine(const std::vector<core::ScoredBox>& candidates,
                    const ColorRaster& xc, const DepthRaster& xd,
                    const RefinerModel& model, double alpha1, double alpha2) {
  const Box merged = nms_merge(candidates, alpha1);
  const Box crop = amplify(merged, alpha2, xc.width, xc.height);
  const RefinerInput input = prepare_input(xc, xd, crop);
  const RefinerOutput out = forward(model, input);
  return RefineResult{denormalize_output(out, input.crop_box), input.crop_box, out};
}

namespace {

constexpr char kMagic[8] = {'T', 'S', 'D', 'M', 'R', 'F', 'N', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)(v >> 8 & 0xff),
                              (unsigned char)(v >> 16 & 0xff), (unsigned char)(v >> 24 & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

void put_f32(std::ofstream& f, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(f, bits);
}

float get_f32(std::ifstream& f) {
  const std::uint32_t bits = get_u32(f);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

[[noreturn]] void bad_file(const std::filesystem::path& p, const std::string& what) {
  throw std::runtime_error("weights file " + p.string() + ": " + what);
}

}  // namespace

void save_model(const std::filesystem::path& file, const RefinerModel& model) {
  std::ofstream f(file, std::ios::binary);
  if (!f) bad_file(file, "cannot open for writing");

  f.write(kMagic, sizeof kMagic);
  put_u32(f, kFormatVersion);
  f.put(char(model.pool));

  const auto refs = model.parameters();
  put_u32(f, std::uint32_t(refs.size()));
  for (const auto& ref : refs) {
    put_u32(f, std::uint32_t(ref.name.size()));
    f.write(ref.name.data(), std::streamsize(ref.name.size()));
    put_u32(f, std::uint32_t(ref.dims.size()));
    for (int d : ref.dims) put_u32(f, std::uint32_t(d));
  }
  for (const auto& ref : refs)
    for (double v : *ref.data) put_f32(f, float(v));
  if (!f) bad_file(file, "write failed");
}

RefinerModel load_model(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) bad_file(file, "cannot open");

  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kMagic, sizeof magic) != 0)
    bad_file(file, "bad magic");
  if (get_u32(f) != kFormatVersion) bad_file(file, "unsupported format version");

  const int pool_byte = f.get();
  if (pool_byte != 0 && pool_byte != 1) bad_file(file, "unknown pool mode");
  RefinerModel model = RefinerModel::make(0, HeadPool(pool_byte));
  auto refs = model.parameters();

  const std::uint32_t count = get_u32(f);
  if (count != refs.size()) bad_file(file, "tensor count mismatch");
  for (auto& ref : refs) {
    const std::uint32_t name_len = get_u32(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (name != ref.name) bad_file(file, "architecture mismatch at tensor " + ref.name);
    const std::uint32_t ndims = get_u32(f);
    std::vector<int> dims(ndims);
    for (auto& d : dims) d = int(get_u32(f));
    if (dims != ref.dims) bad_file(file, "shape mismatch at tensor " + ref.name);
  }
  for (auto& ref : refs)
    for (double& v : *ref.data) v = double(get_f32(f));
  if (!f) bad_file(file, "truncated payload");
  return model;
}

}  // namespace tsdm::refiner
