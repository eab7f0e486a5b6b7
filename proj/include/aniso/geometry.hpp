#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace aniso {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box, half-open: [x0, x1) x [y0, y1).
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  int major() const { return std::max(width(), height()); }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(const Box& o) const {
    return o.x0 >= x0 && o.y0 >= y0 && o.x1 <= x1 && o.y1 <= y1;
  }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }

  friend bool operator==(const Box&, const Box&) = default;
};

inline Box intersect(const Box& a, const Box& b) {
  Box r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
        std::min(a.y1, b.y1)};
  if (r.empty()) return Box{};
  return r;
}

inline Box unite(const Box& a, const Box& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return Box{std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
             std::max(a.y1, b.y1)};
}

/// Round half away from zero.
inline long long round_half_away(double v) {
  return v >= 0 ? static_cast<long long>(v + 0.5) : -static_cast<long long>(-v + 0.5);
}

inline long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline long long ceil_div(long long a, long long b) { return -floor_div(-a, b); }

}  // namespace aniso
