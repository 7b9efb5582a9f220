#include <doctest.h>

#include "tsdm/evalkit.hpp"
#include "tsdm/rng.hpp"

using namespace tsdm;
using namespace tsdm::eval;

TEST_CASE("iou examples") {
  CHECK(iou(Box{3, 4, 5, 6}, Box{3, 4, 5, 6}) == doctest::Approx(1.0));
  CHECK(iou(Box{0, 0, 2, 2}, Box{10, 10, 2, 2}) == 0.0);
  CHECK(iou(Box{0, 0, 2, 2}, Box{1, 1, 2, 2}) == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("iou is symmetric, bounded, and translation invariant") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Box a{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 20),
                rng.uniform(1, 20)};
    const Box b{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 20),
                rng.uniform(1, 20)};
    const double v = iou(a, b);
    REQUIRE(v == iou(b, a));
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    const double dx = rng.uniform(-30, 30), dy = rng.uniform(-30, 30);
    const Box at{a.left + dx, a.top + dy, a.w, a.h};
    const Box bt{b.left + dx, b.top + dy, b.w, b.h};
    REQUIRE(iou(at, bt) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("iou equals 1 only for identical boxes") {
  CHECK(iou(Box{0, 0, 4, 4}, Box{0, 0, 4, 4}) == 1.0);
  CHECK(iou(Box{0, 0, 4, 4}, Box{0, 0, 4, 4.001}) < 1.0);
}

TEST_CASE("success curve of all-ones fails only at threshold 1.00") {
  const std::vector<double> ious(25, 1.0);
  const auto curve = success_curve(ious);
  REQUIRE(curve.size() == 101);
  for (int i = 0; i < 100; ++i) CHECK(curve[std::size_t(i)] == 1.0);
  CHECK(curve[100] == 0.0);
  CHECK(auc(curve) == doctest::Approx(100.0 / 101.0).epsilon(1e-15));
}

TEST_CASE("success curve of all-zeros is identically zero") {
  const std::vector<double> ious(10, 0.0);
  const auto curve = success_curve(ious);
  for (double v : curve) CHECK(v == 0.0);
  CHECK(auc(curve) == 0.0);
}

TEST_CASE("success curve matches brute-force counting and never increases") {
  Rng rng(3);
  std::vector<double> ious;
  for (int i = 0; i < 57; ++i) ious.push_back(rng.uniform(0.0, 1.0));
  const auto curve = success_curve(ious);
  for (int t = 0; t < 101; ++t) {
    int count = 0;
    for (double v : ious)
      if (v > t / 100.0) ++count;
    REQUIRE(curve[std::size_t(t)] == doctest::Approx(double(count) / 57.0));
    if (t > 0) REQUIRE(curve[std::size_t(t)] <= curve[std::size_t(t - 1)]);
  }
}

TEST_CASE("auc of a constant list counts grid points strictly below it") {
  for (double v : {0.135, 0.5, 0.77}) {
    const std::vector<double> ious(9, v);
    int below = 0;
    for (int t = 0; t < 101; ++t)
      if (v > t / 100.0) ++below;
    CHECK(auc(success_curve(ious)) == doctest::Approx(double(below) / 101.0));
  }
}

TEST_CASE("success curve rejects empty input") {
  CHECK_THROWS(success_curve({}));
}

TEST_CASE("category report means and overall") {
  SequenceResult r1;
  r1.ious = {0.5, 1.0};
  SequenceResult r2;
  r2.ious = {0.2, 0.4, 0.6};

  SUBCASE("single category averages arithmetically") {
    const auto report = category_report({r1}, {{"human", "human"}});
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].category == "human");
    CHECK(report.rows[0].mean_iou == doctest::Approx(0.75));
    CHECK(report.overall == doctest::Approx(0.75));
  }

  SUBCASE("overall is frame-weighted, not category-weighted") {
    const auto report =
        category_report({r1, r2}, {{"a", "a"}, {"b", "b", "b"}});
    CHECK(report.overall == doctest::Approx((0.5 + 1.0 + 0.2 + 0.4 + 0.6) / 5.0));
    double concat_mean = 0.0;
    for (double v : r1.ious) concat_mean += v;
    for (double v : r2.ious) concat_mean += v;
    concat_mean /= 5.0;
    CHECK(report.overall == doctest::Approx(concat_mean).epsilon(1e-15));
  }

  SUBCASE("missing tags collect under untagged") {
    const auto report = category_report({r1}, {{}});
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].category == "untagged");
    CHECK(report.rows[0].frames == 2);
  }

  SUBCASE("formatting produces a machine row per category") {
    const auto report = category_report({r1}, {{"human", "rigid"}});
    const std::string csv = format_report_csv(report);
    CHECK(csv.find("overall,") != std::string::npos);
    CHECK(csv.find("human,") != std::string::npos);
    CHECK(csv.find("rigid,") != std::string::npos);
    const std::string text = format_report_text(report);
    CHECK(text.find("overall") != std::string::npos);
  }
}

TEST_CASE("fps measurement") {
  CHECK(measure_fps(100, 4.0) == doctest::Approx(25.0));
  CHECK(measure_fps(10, 0.0) > 0.0);  // duration floor guards zero elapsed
  CHECK_THROWS(measure_fps(0, 1.0));
}
