#pragma once

// Polygon insertion regions rasterized to row spans (even-odd fill,
// pixel-center inclusion) with exact integer arithmetic.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "aniso/error.hpp"
#include "aniso/geometry.hpp"
#include "aniso/rng.hpp"

namespace aniso {

using Polygon = std::vector<Point>;

/// Twice the signed shoelace area.
inline long long doubled_area(const Polygon& poly) {
  long long a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % poly.size()];
    a += static_cast<long long>(p.x) * q.y - static_cast<long long>(q.x) * p.y;
  }
  return a;
}

namespace detail {

inline int orient(Point a, Point b, Point c) {
  long long v = static_cast<long long>(b.x - a.x) * (c.y - a.y) -
                static_cast<long long>(b.y - a.y) * (c.x - a.x);
  return (v > 0) - (v < 0);
}

inline bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline bool segments_touch(Point a, Point b, Point c, Point d) {
  int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace detail

/// Simple polygon check: >= 3 vertices, nonzero area, no two non-adjacent
/// edges touching, adjacent edges not folding back on each other.
inline bool is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3 || doubled_area(poly) == 0) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (poly[i] == poly[(i + 1) % n]) return false;
  for (std::size_t i = 0; i < n; ++i) {
    Point a = poly[i], b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      Point c = poly[j], d = poly[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex is fine; collinear overlap is not.
        Point shared = (j == i + 1) ? b : a;
        Point other_ab = (j == i + 1) ? a : b;
        Point other_cd = (j == i + 1) ? d : c;
        if (detail::orient(other_ab, shared, other_cd) == 0 &&
            (detail::on_segment(shared, other_ab, other_cd) ||
             detail::on_segment(shared, other_cd, other_ab)))
          return false;
        continue;
      }
      if (detail::segments_touch(a, b, c, d)) return false;
    }
  }
  return true;
}

struct Span {
  int y = 0;
  int x0 = 0;  // half-open [x0, x1)
  int x1 = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

/// A set of pixels stored as sorted, disjoint, non-adjacent row spans.
class PixelRegion {
 public:
  PixelRegion() = default;
  explicit PixelRegion(std::vector<Span> spans) : spans_(std::move(spans)) { normalize(); }

  const std::vector<Span>& spans() const { return spans_; }
  bool empty() const { return spans_.empty(); }

  long long area() const {
    long long a = 0;
    for (const auto& s : spans_) a += s.x1 - s.x0;
    return a;
  }

  bool contains(int x, int y) const {
    auto it = std::lower_bound(spans_.begin(), spans_.end(), y,
                               [](const Span& s, int yy) { return s.y < yy; });
    for (; it != spans_.end() && it->y == y; ++it)
      if (x >= it->x0 && x < it->x1) return true;
    return false;
  }

  /// The index-th pixel in row-major order; index < area().
  Point pixel_at(long long index) const {
    for (const auto& s : spans_) {
      const long long w = s.x1 - s.x0;
      if (index < w) return Point{s.x0 + static_cast<int>(index), s.y};
      index -= w;
    }
    fail(ErrorKind::InvalidInput, "pixel index past region area");
  }

  PixelRegion clipped(const Box& box) const {
    std::vector<Span> out;
    for (const auto& s : spans_) {
      if (s.y < box.y0 || s.y >= box.y1) continue;
      Span c{s.y, std::max(s.x0, box.x0), std::min(s.x1, box.x1)};
      if (c.x1 > c.x0) out.push_back(c);
    }
    return PixelRegion(std::move(out));
  }

  PixelRegion united(const PixelRegion& other) const {
    std::vector<Span> all = spans_;
    all.insert(all.end(), other.spans_.begin(), other.spans_.end());
    return PixelRegion(std::move(all));
  }

  Box bounds() const {
    Box b{};
    for (const auto& s : spans_) b = unite(b, Box{s.x0, s.y, s.x1, s.y + 1});
    return b;
  }

  friend bool operator==(const PixelRegion&, const PixelRegion&) = default;

 private:
  void normalize() {
    std::erase_if(spans_, [](const Span& s) { return s.x1 <= s.x0; });
    std::sort(spans_.begin(), spans_.end(),
              [](const Span& a, const Span& b) { return a.y != b.y ? a.y < b.y : a.x0 < b.x0; });
    std::vector<Span> merged;
    for (const auto& s : spans_) {
      if (!merged.empty() && merged.back().y == s.y && s.x0 <= merged.back().x1)
        merged.back().x1 = std::max(merged.back().x1, s.x1);
      else
        merged.push_back(s);
    }
    spans_ = std::move(merged);
  }

  std::vector<Span> spans_;
};

/// Even-odd scanline fill restricted to `clip`. Pixel (x, y) is inside when
/// its center (x + 0.5, y + 0.5) is; edges use the half-open rule in y.
inline PixelRegion rasterize(const Polygon& poly, const Box& clip) {
  std::vector<Span> spans;
  if (poly.size() < 3 || clip.empty()) return PixelRegion{};
  int ymin = poly[0].y, ymax = poly[0].y;
  for (const auto& p : poly) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int ylo = std::max(ymin, clip.y0);
  const int yhi = std::min(ymax, clip.y1);
  std::vector<long long> cuts;
  for (int y = ylo; y < yhi; ++y) {
    cuts.clear();
    const long long yc2 = 2LL * y + 1;  // doubled row center
    for (std::size_t i = 0; i < poly.size(); ++i) {
      Point a = poly[i], b = poly[(i + 1) % poly.size()];
      if ((2LL * a.y > yc2) == (2LL * b.y > yc2)) continue;
      if (a.y > b.y) std::swap(a, b);
      // Crossing x = a.x + (yc - a.y) * dx / dy. First pixel with center
      // >= crossing: smallest x with (2x + 1 - 2 a.x) * dy >= (yc2 - 2 a.y) * dx.
      const long long dy = b.y - a.y;
      const long long num = (yc2 - 2LL * a.y) * (b.x - a.x);
      cuts.push_back(a.x + ceil_div(num - dy, 2 * dy));
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); k += 2) {
      const long long x0 = std::max<long long>(cuts[k], clip.x0);
      const long long x1 = std::min<long long>(cuts[k + 1], clip.x1);
      if (x1 > x0) spans.push_back(Span{y, static_cast<int>(x0), static_cast<int>(x1)});
    }
  }
  return PixelRegion(std::move(spans));
}

/// Uniform pixel from a non-empty region; a pure function of `key`.
inline Point sample_point(const PixelRegion& region, std::uint64_t key) {
  const long long area = region.area();
  if (area == 0) fail(ErrorKind::NoValidLocation, "insertion region is empty");
  CounterRng rng(key);
  return region.pixel_at(static_cast<long long>(rng.below(static_cast<std::uint64_t>(area))));
}

}  // namespace aniso
