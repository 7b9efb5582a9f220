#include "tsdm/sequence_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace tsdm {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& file, const std::string& what) {
  throw std::runtime_error(file.string() + ": " + what);
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

}  // namespace

ColorRaster load_color_png(const std::filesystem::path& file) {
  FilePtr fp(std::fopen(file.string().c_str(), "rb"));
  if (!fp) fail(file, "cannot open");

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) fail(file, "png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) fail(file, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) fail(file, "corrupt PNG");

  png_init_io(r.png, fp.get());
  png_read_info(r.png, r.info);

  // Normalize everything to 8-bit RGB.
  png_set_expand(r.png);
  if (png_get_bit_depth(r.png, r.info) == 16) png_set_strip_16(r.png);
  const int type = png_get_color_type(r.png, r.info);
  if (type == PNG_COLOR_TYPE_GRAY || type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(r.png);
  png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  const int w = int(png_get_image_width(r.png, r.info));
  const int h = int(png_get_image_height(r.png, r.info));
  if (png_get_rowbytes(r.png, r.info) != std::size_t(w) * 3)
    fail(file, "unexpected row size after RGB normalization");

  ColorRaster out(w, h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = out.data.data() + out.offset(0, y);
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return out;
}

DepthRaster load_depth_png(const std::filesystem::path& file) {
  FilePtr fp(std::fopen(file.string().c_str(), "rb"));
  if (!fp) fail(file, "cannot open");

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) fail(file, "png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) fail(file, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) fail(file, "corrupt PNG");

  png_init_io(r.png, fp.get());
  png_read_info(r.png, r.info);

  const int type = png_get_color_type(r.png, r.info);
  if (type != PNG_COLOR_TYPE_GRAY)
    fail(file, "depth image must be grayscale");
  int depth = png_get_bit_depth(r.png, r.info);
  if (depth < 16) {
    png_set_expand_gray_1_2_4_to_8(r.png);
    depth = 8;
  }
#if __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
  if (depth == 16) png_set_swap(r.png);
#endif
  png_read_update_info(r.png, r.info);

  const int w = int(png_get_image_width(r.png, r.info));
  const int h = int(png_get_image_height(r.png, r.info));
  DepthRaster out(w, h);

  if (depth == 16) {
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
      rows[y] = reinterpret_cast<png_bytep>(out.data.data() + std::size_t(y) * w);
    png_read_image(r.png, rows.data());
  } else {
    std::vector<png_bytep> rows(h);
    std::vector<std::uint8_t> all(std::size_t(w) * h);
    for (int y = 0; y < h; ++y) rows[y] = all.data() + std::size_t(y) * w;
    png_read_image(r.png, rows.data());
    for (std::size_t i = 0; i < all.size(); ++i) out.data[i] = all[i];
  }
  png_read_end(r.png, nullptr);
  return out;
}

void save_color_png(const std::filesystem::path& file, const ColorRaster& img) {
  FilePtr fp(std::fopen(file.string().c_str(), "wb"));
  if (!fp) fail(file, "cannot open for writing");

  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) fail(file, "png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) fail(file, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) fail(file, "PNG write failed");

  png_init_io(w.png, fp.get());
  png_set_IHDR(w.png, w.info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);

  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + img.offset(0, y));
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

void save_depth_png(const std::filesystem::path& file, const DepthRaster& img) {
  FilePtr fp(std::fopen(file.string().c_str(), "wb"));
  if (!fp) fail(file, "cannot open for writing");

  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) fail(file, "png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) fail(file, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) fail(file, "PNG write failed");

  png_init_io(w.png, fp.get());
  png_set_IHDR(w.png, w.info, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
#if __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
  png_set_swap(w.png);
#endif

  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<std::uint16_t*>(img.data.data() + std::size_t(y) * img.width));
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

Box parse_box_line(const std::string& line) {
  std::stringstream ss(line);
  double vals[4];
  char sep = ',';
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      ss >> sep;
      if (sep != ',') throw std::runtime_error("expected comma-separated values");
    }
    if (!(ss >> vals[i])) throw std::runtime_error("expected 4 numeric fields");
  }
  Box b{vals[0], vals[1], vals[2], vals[3]};
  if (!b.valid()) throw std::runtime_error("box extents must be positive");
  return b;
}

std::vector<Box> load_ground_truth(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(file, "cannot open");
  std::vector<Box> boxes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      boxes.push_back(parse_box_line(line));
    } catch (const std::exception& e) {
      fail(file, "frame " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (boxes.empty()) fail(file, "no ground-truth boxes");
  return boxes;
}

std::vector<std::string> load_tags(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(file, "cannot open");
  std::vector<std::string> tags;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    tags.push_back(line);
  }
  return tags;
}

namespace {

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08d.png", index);
  return buf;
}

}  // namespace

Sequence load_sequence(const std::filesystem::path& dir) {
  const auto gt_file = dir / "groundtruth.txt";
  if (!std::filesystem::exists(gt_file)) fail(gt_file, "missing");

  Sequence seq;
  seq.ground_truth = load_ground_truth(gt_file);

  const int n = int(seq.ground_truth.size());
  seq.frames.reserve(n);
  for (int i = 1; i <= n; ++i) {
    const auto color_file = dir / "color" / frame_name(i);
    const auto depth_file = dir / "depth" / frame_name(i);
    if (!std::filesystem::exists(color_file))
      fail(color_file, "missing color image for frame " + std::to_string(i));
    if (!std::filesystem::exists(depth_file))
      fail(depth_file, "missing depth image for frame " + std::to_string(i));

    RgbdFrame frame;
    frame.color = load_color_png(color_file);
    frame.depth = load_depth_png(depth_file);
    frame.index = i;
    if (frame.color.width != frame.depth.width ||
        frame.color.height != frame.depth.height)
      throw std::runtime_error("frame " + std::to_string(i) +
                               ": color/depth dimension mismatch");
    seq.frames.push_back(std::move(frame));
  }

  const auto tags_file = dir / "tags.txt";
  if (std::filesystem::exists(tags_file)) {
    seq.tags = load_tags(tags_file);
    seq.tags.resize(seq.frames.size());  // pad/truncate to frame count
  }
  return seq;
}

void write_sequence(const std::filesystem::path& dir, const Sequence& seq) {
  if (seq.frames.size() != seq.ground_truth.size())
    throw std::invalid_argument("frame and ground-truth counts differ");
  std::filesystem::create_directories(dir / "color");
  std::filesystem::create_directories(dir / "depth");

  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const int idx = int(i) + 1;
    save_color_png(dir / "color" / frame_name(idx), seq.frames[i].color);
    save_depth_png(dir / "depth" / frame_name(idx), seq.frames[i].depth);
  }

  std::ofstream gt(dir / "groundtruth.txt");
  if (!gt) fail(dir / "groundtruth.txt", "cannot open for writing");
  gt.precision(10);
  for (const Box& b : seq.ground_truth)
    gt << b.left << ',' << b.top << ',' << b.w << ',' << b.h << '\n';

  if (!seq.tags.empty()) {
    std::ofstream tf(dir / "tags.txt");
    for (std::size_t i = 0; i < seq.frames.size(); ++i)
      tf << (i < seq.tags.size() ? seq.tags[i] : std::string()) << '\n';
  }
}

}  // namespace tsdm
