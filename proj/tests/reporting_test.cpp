#include "aniso/mock_detector.hpp"
#include "aniso/png_io.hpp"
#include "aniso/probe_planner.hpp"
#include "aniso/reporting.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace aniso {
namespace {

using testing::TempDir;

std::vector<CellMetrics> grid_cells(double size, const std::vector<int>& grid,
                                    const std::function<double(int, int)>& rate) {
  std::vector<CellMetrics> cells;
  for (int dx : grid)
    for (int dy : grid) {
      CellMetrics c;
      c.key = {size, dx, dy};
      c.n = 10;
      c.r_t = rate(dx, dy);
      c.r_a = c.r_t / 2;
      c.c_t = 0.5;
      cells.push_back(c);
    }
  return cells;
}

Rgb pixel(const Image& img, Point p) {
  const std::uint8_t* q = img.px(p.x, p.y);
  return {q[0], q[1], q[2]};
}

double luminance(Rgb c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

TEST(Heatmap, MetricNames) {
  for (const char* n : {"r_t", "r_a", "c_t", "c_a", "s_t", "s_a"})
    EXPECT_STREQ(to_string(metric_from_string(n)), n);
  EXPECT_THROW(metric_from_string("mAP"), Error);
}

TEST(Heatmap, UniformMapIsConstantColor) {
  const auto grid = offset_grid(40, 800);
  auto cells = grid_cells(0.05, grid, [](int, int) { return 0.8; });
  auto h = heatmap(cells, Metric::RateTop);
  ASSERT_EQ(h.dx_axis, grid);
  ASSERT_EQ(h.dy_axis, grid);
  const Rgb want = ramp(0.8);
  for (std::size_t j = 0; j < grid.size(); ++j)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      EXPECT_EQ(pixel(h.image, tile_center(i, j)), want);
      // The whole tile, not just its center.
      const Point c = tile_center(i, j);
      EXPECT_EQ(pixel(h.image, {c.x - kTile / 2, c.y - kTile / 2}), want);
      EXPECT_EQ(pixel(h.image, {c.x + kTile / 2 - 1, c.y + kTile / 2 - 1}), want);
    }
  for (const auto& [k, v] : parse_heatmap_csv(h.csv)) EXPECT_EQ(v, 0.8);
}

TEST(Heatmap, AbsentCellUsesSentinel) {
  const std::vector<int> grid{0, 2, 4};
  auto cells = grid_cells(0.05, grid, [](int dx, int dy) { return (dx + dy) / 10.0; });
  // (2, 4) missing entirely; (4, 0) present but with no confidence value.
  std::erase_if(cells, [](const CellMetrics& c) { return c.key.dx == 2 && c.key.dy == 4; });
  for (auto& c : cells)
    if (c.key.dx == 4 && c.key.dy == 0) c.c_t.reset();
  auto rt = heatmap(cells, Metric::RateTop);
  EXPECT_EQ(pixel(rt.image, tile_center(1, 2)), kAbsentColor);
  EXPECT_NE(pixel(rt.image, tile_center(2, 0)), kAbsentColor);
  auto parsed = parse_heatmap_csv(rt.csv);
  EXPECT_FALSE(parsed.at({2, 4}).has_value());
  EXPECT_EQ(parsed.at({4, 2}), 0.6);
  EXPECT_NE(rt.csv.find("4,0.4,,0.8\n"), std::string::npos) << rt.csv;

  auto ct = heatmap(cells, Metric::ConfTop);
  EXPECT_EQ(pixel(ct.image, tile_center(2, 0)), kAbsentColor);
  EXPECT_NE(ct.csv.find("0,0.5,0.5,\n"), std::string::npos) << ct.csv;
}

TEST(Heatmap, MockProfileDarkestInCorner) {
  DegradationProfile p;
  const auto grid = offset_grid(64, 800);
  auto cells = grid_cells(0.08, grid, [&](int dx, int dy) { return detection_probability(p, dx, dy); });
  auto h = heatmap(cells, Metric::RateTop);
  const double corner = luminance(pixel(h.image, tile_center(0, 0)));
  for (std::size_t j = 0; j < grid.size(); ++j)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double l = luminance(pixel(h.image, tile_center(i, j)));
      EXPECT_LE(corner, l) << i << "," << j;
      if (grid[i] >= 30 && grid[j] >= 30) {
        EXPECT_LT(corner, l);
      }
    }
}

TEST(Heatmap, CsvRoundTripsExactly) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  const std::vector<int> grid{0, 7, 30, 350};
  std::vector<CellMetrics> cells;
  for (int dx : grid)
    for (int dy : grid) {
      CellMetrics c;
      c.key = {0.18, dx, dy};
      c.n = 3;
      c.r_t = u(rng);
      c.s_a = u(rng) / 3;
      cells.push_back(c);
    }
  for (Metric m : {Metric::RateTop, Metric::IouAccurate}) {
    auto parsed = parse_heatmap_csv(heatmap(cells, m).csv);
    for (const auto& c : cells) EXPECT_EQ(parsed.at({c.key.dx, c.key.dy}), select(c, m));
  }
  cells.push_back(CellMetrics{{0.05, 0, 0}, 1, 0, 0, {}, {}, {}, {}});
  EXPECT_THROW(heatmap(cells, Metric::RateTop), Error);
}

TEST(Heatmap, WritesPngAndCsv) {
  TempDir dir("report");
  auto cells = grid_cells(0.05, {0, 2}, [](int, int) { return 0.5; });
  auto h = heatmap(cells, Metric::RateTop);
  write_heatmap(h, dir.path(), "hm");
  Image back = png::read(dir / "hm.png", 3);
  EXPECT_EQ(back.data, h.image.data);
  std::ifstream in(dir / "hm.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), h.csv);
}

Rle box_rle(int w, int h, Box b) {
  BinaryMask m(w, h);
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x) m.set(x, y);
  return rle_encode(m);
}

TEST(Density, FullFrame) {
  std::vector<ImageAnnotations> a{{300, 200, {box_rle(300, 200, {0, 0, 300, 200})}}};
  auto d = density_map(a);
  EXPECT_EQ(d.size, 640);
  EXPECT_EQ(d.images, 1u);
  EXPECT_EQ(d.masks, 1u);
  for (auto c : d.counts) ASSERT_EQ(c, 1u);
}

TEST(Density, HalvesPartition) {
  std::vector<ImageAnnotations> a{
      {301, 199, {box_rle(301, 199, {0, 0, 150, 199}), box_rle(301, 199, {150, 0, 301, 199})}}};
  auto d = density_map(a);
  std::uint64_t total = 0;
  for (auto c : d.counts) {
    ASSERT_LE(c, 1u);
    total += c;
  }
  EXPECT_EQ(total, 640u * 640u);
}

TEST(Density, CenteredBoxesDirectSummation) {
  const std::pair<int, int> sizes[] = {{1000, 800}, {640, 640}, {333, 517}};
  std::vector<ImageAnnotations> a;
  std::vector<Box> boxes;
  for (auto [w, h] : sizes) {
    const Box b{w / 4, h / 4, w - w / 4, h - h / 4};
    boxes.push_back(b);
    a.push_back({w, h, {box_rle(w, h, b)}});
  }
  auto d = density_map(a);
  // Direct summation: each destination cell looks at the source pixel under
  // its center, computed in floating point.
  for (int y = 0; y < 640; ++y)
    for (int x = 0; x < 640; ++x) {
      unsigned want = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const int sx = static_cast<int>(std::floor((x + 0.5) * a[i].width / 640.0));
        const int sy = static_cast<int>(std::floor((y + 0.5) * a[i].height / 640.0));
        want += boxes[i].contains(sx, sy);
      }
      ASSERT_EQ(d.at(x, y), want) << x << "," << y;
      ASSERT_LE(d.at(x, y), d.masks);
    }
  EXPECT_EQ(d.at(320, 320), 3u);
  EXPECT_EQ(d.at(0, 0), 0u);
  EXPECT_EQ(d.at(639, 320), 0u);
  EXPECT_EQ(d.at(320, 5), 0u);
}

TEST(Density, AdditiveAndChecked) {
  std::mt19937 rng(9);
  auto random_set = [&](int n) {
    std::vector<ImageAnnotations> s;
    for (int i = 0; i < n; ++i) {
      const int w = 50 + static_cast<int>(rng() % 400), h = 50 + static_cast<int>(rng() % 400);
      const int x0 = static_cast<int>(rng() % (w - 10)), y0 = static_cast<int>(rng() % (h - 10));
      s.push_back({w, h, {box_rle(w, h, {x0, y0, x0 + 10, y0 + 10})}});
    }
    return s;
  };
  auto A = random_set(4), B = random_set(3);
  std::vector<ImageAnnotations> AB = A;
  AB.insert(AB.end(), B.begin(), B.end());
  EXPECT_EQ(density_map(AB, 64), density_map(A, 64) + density_map(B, 64));

  std::vector<ImageAnnotations> bad{{100, 100, {box_rle(100, 99, {0, 0, 5, 5})}}};
  try {
    density_map(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("mask/size mismatch"), std::string::npos);
  }
}

TEST(Density, WritesSixteenBitPngAndCsv) {
  TempDir dir("density");
  std::vector<ImageAnnotations> a{{64, 64, {box_rle(64, 64, {0, 0, 32, 64})}},
                                  {64, 64, {box_rle(64, 64, {16, 0, 48, 64})}}};
  auto d = density_map(a, 32);
  write_density(d, dir.path());
  int pw = 0, ph = 0;
  auto px = png::read_gray16(dir / "density.png", &pw, &ph);
  EXPECT_EQ(pw, 32);
  EXPECT_EQ(ph, 32);
  ASSERT_EQ(px.size(), d.counts.size());
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_EQ(px[i], d.counts[i]);
  std::ifstream in(dir / "density.csv");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.substr(0, 12), "1,1,1,1,1,1,");
  EXPECT_EQ(d.at(12, 0), 2u);
}

}  // namespace
}  // namespace aniso
