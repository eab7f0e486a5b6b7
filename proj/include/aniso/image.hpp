#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#include "aniso/error.hpp"
#include "aniso/geometry.hpp"

namespace aniso {

/// Interleaved 8-bit image with 1, 3 or 4 channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t* px(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Row-major binary mask. Cells hold 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int w, int h) : width_(w), height_(h), cells_(static_cast<std::size_t>(w) * h, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return cells_.size(); }

  bool at(int x, int y) const { return cells_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v = true) {
    cells_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }

  const std::vector<std::uint8_t>& cells() const { return cells_; }
  std::vector<std::uint8_t>& cells() { return cells_; }

  std::size_t area() const {
    std::size_t n = 0;
    for (auto c : cells_) n += c;
    return n;
  }

  /// Tight half-open bounds of set cells; empty box when the mask is empty.
  Box bounds() const {
    Box b{width_, height_, 0, 0};
    for (int y = 0; y < height_; ++y) {
      const std::uint8_t* row = cells_.data() + static_cast<std::size_t>(y) * width_;
      const void* first = std::memchr(row, 1, width_);
      if (!first) continue;
      int x_first = static_cast<int>(static_cast<const std::uint8_t*>(first) - row);
      int x_last = width_ - 1;
      while (!row[x_last]) --x_last;
      b.x0 = std::min(b.x0, x_first);
      b.x1 = std::max(b.x1, x_last + 1);
      b.y0 = std::min(b.y0, y);
      b.y1 = std::max(b.y1, y + 1);
    }
    return b.empty() ? Box{} : b;
  }

  /// Sub-window copy; cells outside this mask read as 0.
  BinaryMask window(const Box& w) const {
    BinaryMask out(w.width(), w.height());
    Box src = intersect(w, Box{0, 0, width_, height_});
    if (src.empty()) return out;
    for (int y = src.y0; y < src.y1; ++y)
      std::copy_n(cells_.data() + static_cast<std::size_t>(y) * width_ + src.x0, src.width(),
                  out.cells_.data() + static_cast<std::size_t>(y - w.y0) * out.width_ + (src.x0 - w.x0));
    return out;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

inline Image crop(const Image& src, const Box& w) {
  if (w.x0 < 0 || w.y0 < 0 || w.x1 > src.width || w.y1 > src.height || w.empty())
    fail(ErrorKind::OutOfBounds, "crop window exits the image");
  Image out(w.width(), w.height(), src.channels);
  const std::size_t row_bytes = static_cast<std::size_t>(w.width()) * src.channels;
  for (int y = 0; y < w.height(); ++y)
    std::copy_n(src.px(w.x0, w.y0 + y), row_bytes, out.px(0, y));
  return out;
}

}  // namespace aniso
