#pragma once

// Heatmaps of per-cell metrics and annotation density maps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "aniso/error.hpp"
#include "aniso/image.hpp"
#include "aniso/metrics.hpp"
#include "aniso/png_io.hpp"
#include "aniso/rle.hpp"

namespace aniso {

enum class Metric { RateTop, RateAccurate, ConfTop, ConfAccurate, IouTop, IouAccurate };

inline const std::array<std::pair<const char*, Metric>, 6> kMetricNames{{
    {"r_t", Metric::RateTop},
    {"r_a", Metric::RateAccurate},
    {"c_t", Metric::ConfTop},
    {"c_a", Metric::ConfAccurate},
    {"s_t", Metric::IouTop},
    {"s_a", Metric::IouAccurate},
}};

inline Metric metric_from_string(const std::string& s) {
  for (const auto& [name, m] : kMetricNames)
    if (s == name) return m;
  fail(ErrorKind::InvalidInput, "unknown metric '" + s + "' (expected r_t, r_a, c_t, c_a, s_t or s_a)");
}

inline const char* to_string(Metric m) {
  for (const auto& [name, mm] : kMetricNames)
    if (m == mm) return name;
  return "?";
}

inline std::optional<double> select(const CellMetrics& c, Metric m) {
  switch (m) {
    case Metric::RateTop: return c.r_t;
    case Metric::RateAccurate: return c.r_a;
    case Metric::ConfTop: return c.c_t;
    case Metric::ConfAccurate: return c.c_a;
    case Metric::IouTop: return c.s_t;
    case Metric::IouAccurate: return c.s_a;
  }
  return std::nullopt;
}

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kAbsentColor{255, 0, 255};
inline constexpr Rgb kBackdrop{255, 255, 255};
inline constexpr Rgb kInk{0, 0, 0};

/// Viridis-like ramp from dark (0) to bright (1), linear between anchors.
inline Rgb ramp(double v) {
  static constexpr std::array<Rgb, 5> anchors{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  v = std::clamp(v, 0.0, 1.0) * (anchors.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(v), anchors.size() - 2);
  const double t = v - i;
  Rgb out;
  for (int c = 0; c < 3; ++c)
    out[c] = static_cast<std::uint8_t>(std::lround(anchors[i][c] * (1 - t) + anchors[i + 1][c] * t));
  return out;
}

namespace detail {

// 3x5 glyphs, one row per 3-bit value (MSB = left column).
inline const std::map<char, std::array<std::uint8_t, 5>>& glyphs() {
  static const std::map<char, std::array<std::uint8_t, 5>> g{
      {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}},
      {'3', {7, 1, 7, 1, 7}}, {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}},
      {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}}, {'8', {7, 5, 7, 5, 7}},
      {'9', {7, 5, 7, 1, 7}}, {'d', {1, 1, 7, 5, 7}}, {'x', {0, 5, 2, 5, 0}},
      {'y', {5, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}},
  };
  return g;
}

inline void put(Image& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  std::copy(c.begin(), c.end(), img.px(x, y));
}

inline void fill(Image& img, const Box& b, Rgb c) {
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x) put(img, x, y, c);
}

inline int text_width(const std::string& s) { return s.empty() ? 0 : static_cast<int>(s.size()) * 4 - 1; }

inline void text(Image& img, int x, int y, const std::string& s, Rgb c) {
  for (char ch : s) {
    auto it = glyphs().find(ch);
    if (it != glyphs().end())
      for (int row = 0; row < 5; ++row)
        for (int col = 0; col < 3; ++col)
          if (it->second[row] & (4 >> col)) put(img, x + col, y + row, c);
    x += 4;
  }
}

}  // namespace detail

struct Heatmap {
  std::vector<int> dx_axis;
  std::vector<int> dy_axis;
  std::vector<std::optional<double>> values;  // row-major over (dy, dx)
  Image image;
  std::string csv;

  std::optional<double> at(std::size_t ix, std::size_t iy) const {
    return values[iy * dx_axis.size() + ix];
  }
};

inline constexpr int kTile = 20;
inline constexpr int kAxisMargin = 22;

/// One equal-size tile per offset index; x is dx, y is dy, (0,0) top-left.
inline Heatmap heatmap(std::span<const CellMetrics> cells, Metric metric) {
  if (cells.empty()) fail(ErrorKind::InvalidInput, "no cells to render");
  const double size = cells.front().key.size;
  std::set<int> xs, ys;
  for (const auto& c : cells) {
    if (c.key.size != size) fail(ErrorKind::InvalidInput, "heatmap cells span several size classes");
    xs.insert(c.key.dx);
    ys.insert(c.key.dy);
  }
  Heatmap h;
  h.dx_axis.assign(xs.begin(), xs.end());
  h.dy_axis.assign(ys.begin(), ys.end());
  h.values.assign(h.dx_axis.size() * h.dy_axis.size(), std::nullopt);
  auto index_of = [](const std::vector<int>& axis, int v) {
    return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
  };
  for (const auto& c : cells)
    h.values[index_of(h.dy_axis, c.key.dy) * h.dx_axis.size() + index_of(h.dx_axis, c.key.dx)] =
        select(c, metric);

  const int nx = static_cast<int>(h.dx_axis.size());
  const int ny = static_cast<int>(h.dy_axis.size());
  h.image = Image(kAxisMargin + nx * kTile + 2, kAxisMargin + ny * kTile + 2, 3, 255);
  detail::text(h.image, kAxisMargin + nx * kTile / 2 - 3, 1, "dx", kInk);
  detail::text(h.image, 1, kAxisMargin + ny * kTile / 2 - 2, "dy", kInk);
  for (int i = 0; i < nx; ++i) {
    const std::string label = std::to_string(h.dx_axis[i]);
    detail::text(h.image, kAxisMargin + i * kTile + (kTile - detail::text_width(label)) / 2, 14,
                 label, kInk);
  }
  for (int j = 0; j < ny; ++j) {
    const std::string label = std::to_string(h.dy_axis[j]);
    detail::text(h.image, kAxisMargin - 2 - detail::text_width(label),
                 kAxisMargin + j * kTile + (kTile - 5) / 2, label, kInk);
  }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const auto v = h.at(i, j);
      const Box tile{kAxisMargin + i * kTile, kAxisMargin + j * kTile,
                     kAxisMargin + (i + 1) * kTile, kAxisMargin + (j + 1) * kTile};
      detail::fill(h.image, tile, v ? ramp(*v) : kAbsentColor);
    }

  std::ostringstream os;
  os << "dy\\dx";
  for (int x : h.dx_axis) os << ',' << x;
  os << '\n';
  for (int j = 0; j < ny; ++j) {
    os << h.dy_axis[j];
    for (int i = 0; i < nx; ++i) {
      os << ',';
      if (auto v = h.at(i, j)) os << format_real(*v);
    }
    os << '\n';
  }
  h.csv = os.str();
  return h;
}

/// Tile center in image coordinates for grid indices (ix, iy).
inline Point tile_center(std::size_t ix, std::size_t iy) {
  return Point{kAxisMargin + static_cast<int>(ix) * kTile + kTile / 2,
               kAxisMargin + static_cast<int>(iy) * kTile + kTile / 2};
}

/// Parses a heatmap CSV back into (dx, dy) -> value.
inline std::map<std::pair<int, int>, std::optional<double>> parse_heatmap_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<int> dxs;
  {
    std::istringstream ls(line);
    std::string f;
    std::getline(ls, f, ',');
    while (std::getline(ls, f, ',')) dxs.push_back(static_cast<int>(parse_real(f)));
  }
  std::map<std::pair<int, int>, std::optional<double>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    while (f.size() < dxs.size() + 1) f.push_back("");
    const int dy = static_cast<int>(parse_real(f[0]));
    for (std::size_t i = 0; i < dxs.size(); ++i)
      out[{dxs[i], dy}] = f[i + 1].empty() ? std::nullopt : std::optional<double>(parse_real(f[i + 1]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annotation density.

struct ImageAnnotations {
  int width = 0;
  int height = 0;
  std::vector<Rle> masks;
};

struct DensityMap {
  int size = 640;
  std::vector<std::uint32_t> counts;  // row-major size x size
  std::size_t images = 0;
  std::size_t masks = 0;

  std::uint32_t at(int x, int y) const { return counts[static_cast<std::size_t>(y) * size + x]; }
  friend bool operator==(const DensityMap&, const DensityMap&) = default;
};

inline constexpr int kDensitySize = 640;

/// Each mask is resampled to size x size by nearest neighbour (source pixel
/// under each destination center) and the binary results are summed.
inline DensityMap density_map(std::span<const ImageAnnotations> annotations,
                              int standard_size = kDensitySize) {
  if (standard_size < 1) fail(ErrorKind::InvalidInput, "standard size must be >= 1");
  DensityMap d;
  d.size = standard_size;
  d.counts.assign(static_cast<std::size_t>(standard_size) * standard_size, 0);
  std::vector<int> sx(standard_size), sy(standard_size);
  for (const auto& a : annotations) {
    if (a.width < 1 || a.height < 1) fail(ErrorKind::InvalidInput, "annotation image has no pixels");
    for (int i = 0; i < standard_size; ++i) {
      sx[i] = static_cast<int>((2LL * i + 1) * a.width / (2LL * standard_size));
      sy[i] = static_cast<int>((2LL * i + 1) * a.height / (2LL * standard_size));
    }
    for (const auto& rle : a.masks) {
      if (rle.width != a.width || rle.height != a.height)
        fail(ErrorKind::InvalidInput, "mask/size mismatch: mask is " + std::to_string(rle.width) +
                                          "x" + std::to_string(rle.height) + ", image is " +
                                          std::to_string(a.width) + "x" + std::to_string(a.height));
      const BinaryMask m = rle_decode(rle);
      for (int y = 0; y < standard_size; ++y)
        for (int x = 0; x < standard_size; ++x)
          d.counts[static_cast<std::size_t>(y) * standard_size + x] += m.at(sx[x], sy[y]);
      ++d.masks;
    }
    ++d.images;
  }
  return d;
}

inline DensityMap operator+(DensityMap a, const DensityMap& b) {
  if (a.size != b.size) fail(ErrorKind::InvalidInput, "density maps differ in size");
  for (std::size_t i = 0; i < a.counts.size(); ++i) a.counts[i] += b.counts[i];
  a.images += b.images;
  a.masks += b.masks;
  return a;
}

inline std::string density_csv(const DensityMap& d) {
  std::ostringstream os;
  for (int y = 0; y < d.size; ++y) {
    for (int x = 0; x < d.size; ++x) os << (x ? "," : "") << d.at(x, y);
    os << '\n';
  }
  return os.str();
}

/// 16-bit gray PNG (saturating at 65535) plus the exact counts as CSV.
inline void write_density(const DensityMap& d, const std::filesystem::path& dir,
                          const std::string& stem = "density") {
  std::filesystem::create_directories(dir);
  std::vector<std::uint16_t> px(d.counts.size());
  for (std::size_t i = 0; i < px.size(); ++i)
    px[i] = static_cast<std::uint16_t>(std::min<std::uint32_t>(d.counts[i], 65535));
  png::write_gray16(dir / (stem + ".png"), d.size, d.size, px);
  std::ofstream(dir / (stem + ".csv"), std::ios::binary) << density_csv(d);
}

inline void write_heatmap(const Heatmap& h, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  png::write(dir / (stem + ".png"), h.image);
  std::ofstream(dir / (stem + ".csv"), std::ios::binary) << h.csv;
}

}  // namespace aniso
