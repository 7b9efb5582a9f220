#include <doctest.h>

#include <cmath>

#include "tsdm/raster.hpp"
#include "tsdm/rng.hpp"

using namespace tsdm;

namespace {

ColorRaster gradient_image(int w, int h) {
  ColorRaster img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set(x, y, Rgb8{std::uint8_t((x * 7 + y * 13) % 256),
                         std::uint8_t((x * 3 + y * 5) % 256),
                         std::uint8_t((x + y) % 256)});
  return img;
}

}  // namespace

TEST_CASE("box accessors are consistent") {
  const Box b{10.0, 20.0, 30.0, 40.0};
  CHECK(b.right() == 40.0);
  CHECK(b.bottom() == 60.0);
  CHECK(b.center_x() == 25.0);
  CHECK(b.center_y() == 40.0);
  const Box c = Box::from_center(25.0, 40.0, 30.0, 40.0);
  CHECK(c.left == doctest::Approx(10.0));
  CHECK(c.top == doctest::Approx(20.0));
}

TEST_CASE("rasterize rounds left/top down and right/bottom up") {
  const IntRect r = rasterize(Box{1.2, 2.7, 3.1, 1.1});
  CHECK(r.x0 == 1);
  CHECK(r.y0 == 2);
  CHECK(r.x1() == 5);   // ceil(4.3)
  CHECK(r.y1() == 4);   // ceil(3.8)
}

TEST_CASE("full-frame crop is the identity") {
  const ColorRaster img = gradient_image(12, 9);
  const ColorRaster out = crop(img, Box{0, 0, 12, 9}, false);
  CHECK(out == img);
}

TEST_CASE("crop half off the left edge zero-fills when clamp is off") {
  const ColorRaster img = gradient_image(10, 6);
  const ColorRaster out = crop(img, Box{-4, 0, 8, 6}, false);
  REQUIRE(out.width == 8);
  REQUIRE(out.height == 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 4; ++x) CHECK(out.at(x, y) == Rgb8{0, 0, 0});
  for (int y = 0; y < 6; ++y)
    for (int x = 4; x < 8; ++x) CHECK(out.at(x, y) == img.at(x - 4, y));
}

TEST_CASE("crop with clamp clips to the raster") {
  const ColorRaster img = gradient_image(10, 6);
  const ColorRaster out = crop(img, Box{-4, 0, 8, 6}, true);
  REQUIRE(out.width == 4);
  REQUIRE(out.height == 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 4; ++x) CHECK(out.at(x, y) == img.at(x, y));
}

TEST_CASE("crop of a known gradient matches direct indexing") {
  const ColorRaster img = gradient_image(32, 24);
  const ColorRaster out = crop(img, Box{5, 7, 10, 10}, false);
  REQUIRE(out.width == 10);
  REQUIRE(out.height == 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) REQUIRE(out.at(x, y) == img.at(x + 5, y + 7));
}

TEST_CASE("crop rejects a box fully outside the raster") {
  const ColorRaster img = gradient_image(10, 6);
  CHECK_THROWS(crop(img, Box{20, 20, 4, 4}, false));
  CHECK_THROWS(crop(img, Box{20, 20, 4, 4}, true));
}

TEST_CASE("complement tiles reassemble the original raster") {
  const ColorRaster img = gradient_image(20, 14);
  const ColorRaster a = crop(img, Box{0, 0, 11, 14}, true);
  const ColorRaster b = crop(img, Box{11, 0, 9, 14}, true);
  ColorRaster rebuilt(20, 14);
  for (int y = 0; y < 14; ++y) {
    for (int x = 0; x < 11; ++x) rebuilt.set(x, y, a.at(x, y));
    for (int x = 11; x < 20; ++x) rebuilt.set(x, y, b.at(x - 11, y));
  }
  CHECK(rebuilt == img);
}

TEST_CASE("resize to the same size is the identity") {
  const ColorRaster img = gradient_image(17, 11);
  CHECK(resize(img, 17, 11, ResizeMode::Bilinear) == img);
  DepthRaster d(5, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) d.set(x, y, std::uint16_t(100 * x + y));
  CHECK(resize(d, 5, 4, ResizeMode::Nearest) == d);
}

TEST_CASE("constant rasters stay constant under resize") {
  ColorRaster img(2, 2);
  for (int i = 0; i < 4; ++i) img.set(i % 2, i / 2, Rgb8{90, 40, 200});
  const ColorRaster out = resize(img, 13, 7, ResizeMode::Bilinear);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x) CHECK(out.at(x, y) == Rgb8{90, 40, 200});
}

TEST_CASE("bilinear resize of a ramp matches the direct formula") {
  ColorRaster img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      img.set(x, y, Rgb8{std::uint8_t(x * 60), std::uint8_t(y * 60), 0});

  const int ow = 9, oh = 6;
  const ColorRaster out = resize(img, ow, oh, ResizeMode::Bilinear);

  // independent evaluation at half-pixel sample centers
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double sx = (x + 0.5) * 4.0 / ow - 0.5;
      const double sy = (y + 0.5) * 4.0 / oh - 0.5;
      const double cx = std::min(std::max(sx, 0.0), 3.0);
      const double cy = std::min(std::max(sy, 0.0), 3.0);
      const int x0 = std::min(int(cx), 3), y0 = std::min(int(cy), 3);
      const int x1 = std::min(x0 + 1, 3), y1 = std::min(y0 + 1, 3);
      const double ax = cx - x0, ay = cy - y0;
      auto sample = [&](int ch) {
        auto px = [&](int xx, int yy) {
          const Rgb8 p = img.at(xx, yy);
          return double(ch == 0 ? p.r : ch == 1 ? p.g : p.b);
        };
        return (1 - ay) * ((1 - ax) * px(x0, y0) + ax * px(x1, y0)) +
               ay * ((1 - ax) * px(x0, y1) + ax * px(x1, y1));
      };
      const Rgb8 got = out.at(x, y);
      REQUIRE(got.r == std::uint8_t(std::floor(sample(0) + 0.5)));
      REQUIRE(got.g == std::uint8_t(std::floor(sample(1) + 0.5)));
      REQUIRE(got.b == std::uint8_t(std::floor(sample(2) + 0.5)));
    }
  }
}

TEST_CASE("nearest depth resize never invents values") {
  Rng rng(5);
  DepthRaster d(7, 5);
  for (auto& v : d.data) v = std::uint16_t(rng.uniform_int(0, 5) * 700);
  const DepthRaster out = resize(d, 23, 17, ResizeMode::Nearest);
  for (auto v : out.data) {
    bool found = false;
    for (auto src : d.data)
      if (src == v) found = true;
    REQUIRE(found);
  }
}

TEST_CASE("max_valid_depth_m ignores nothing and converts to meters") {
  DepthRaster d(3, 1);
  d.set(0, 0, 0);
  d.set(1, 0, 1500);
  d.set(2, 0, 4200);
  CHECK(max_valid_depth_m(d) == doctest::Approx(4.2));
}
