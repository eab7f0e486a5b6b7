#pragma once

// Target resizing and source-over compositing with exact ground truth.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aniso/error.hpp"
#include "aniso/geometry.hpp"
#include "aniso/image.hpp"
#include "aniso/scene_catalog.hpp"

namespace aniso {

inline constexpr int kDefaultCropDimension = 800;
inline const std::vector<double> kDefaultSizes{0.05, 0.08, 0.12, 0.18};

/// round(proportion * crop_dimension), ties away from zero.
inline int major_dimension(double size_proportion, int crop_dimension) {
  if (!(size_proportion > 0.0 && size_proportion < 1.0))
    fail(ErrorKind::InvalidInput, "size proportion must lie in (0, 1)");
  if (crop_dimension < 1) fail(ErrorKind::InvalidInput, "crop dimension must be >= 1");
  return static_cast<int>(round_half_away(size_proportion * crop_dimension));
}

/// Resampled cutout. Color is straight (not premultiplied), 0..255; alpha is 0..1.
struct ResizedTarget {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;
  std::vector<float> alpha;

  float a(int x, int y) const { return alpha[static_cast<std::size_t>(y) * width + x]; }
  const float* color(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  /// Tight bounds of alpha >= 0.5, in cutout coordinates.
  Box mask_bounds() const {
    Box b{width, height, 0, 0};
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (a(x, y) >= 0.5f) {
          b.x0 = std::min(b.x0, x);
          b.y0 = std::min(b.y0, y);
          b.x1 = std::max(b.x1, x + 1);
          b.y1 = std::max(b.y1, y + 1);
        }
    return b.empty() ? Box{} : b;
  }
};

/// Scales the mask-bounded part of an RGBA cutout uniformly so that its major
/// dimension becomes round(size_proportion * crop_dimension). Bilinear on
/// premultiplied color and on alpha, pixel-center aligned, edge-clamped.
inline ResizedTarget resize_target(const Image& rgba, double size_proportion, int crop_dimension) {
  if (rgba.channels != 4) fail(ErrorKind::InvalidInput, "target cutout must be RGBA");
  const Box src = alpha_bounds(rgba);
  if (src.empty()) fail(ErrorKind::Degenerate, "target alpha mask is empty");
  const int desired = major_dimension(size_proportion, crop_dimension);
  if (desired < 1) fail(ErrorKind::Degenerate, "desired major dimension is 0");

  const long long sw = src.width(), sh = src.height(), smaj = std::max(sw, sh);
  // round(side * desired / major), half away from zero, in integers.
  auto scaled = [&](long long side) {
    return static_cast<int>((2 * side * desired + smaj) / (2 * smaj));
  };
  ResizedTarget out;
  out.width = scaled(sw);
  out.height = scaled(sh);
  if (out.width < 1 || out.height < 1)
    fail(ErrorKind::Degenerate, "resized target has a zero minor dimension");

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
  out.rgb.assign(n * 3, 0.f);
  out.alpha.assign(n, 0.f);
  const double fx = static_cast<double>(sw) / out.width;
  const double fy = static_cast<double>(sh) / out.height;

  auto sample = [&](int x, int y, double w, double acc[4]) {
    const std::uint8_t* p = rgba.px(src.x0 + x, src.y0 + y);
    const double al = p[3] / 255.0;
    acc[0] += w * p[0] * al;
    acc[1] += w * p[1] * al;
    acc[2] += w * p[2] * al;
    acc[3] += w * al;
  };

  for (int oy = 0; oy < out.height; ++oy) {
    const double syf = std::clamp((oy + 0.5) * fy - 0.5, 0.0, static_cast<double>(sh - 1));
    const int y0 = static_cast<int>(syf);
    const int y1 = std::min<int>(y0 + 1, static_cast<int>(sh) - 1);
    const double ty = syf - y0;
    for (int ox = 0; ox < out.width; ++ox) {
      const double sxf = std::clamp((ox + 0.5) * fx - 0.5, 0.0, static_cast<double>(sw - 1));
      const int x0 = static_cast<int>(sxf);
      const int x1 = std::min<int>(x0 + 1, static_cast<int>(sw) - 1);
      const double tx = sxf - x0;
      double acc[4] = {0, 0, 0, 0};
      sample(x0, y0, (1 - tx) * (1 - ty), acc);
      sample(x1, y0, tx * (1 - ty), acc);
      sample(x0, y1, (1 - tx) * ty, acc);
      sample(x1, y1, tx * ty, acc);
      const std::size_t i = static_cast<std::size_t>(oy) * out.width + ox;
      out.alpha[i] = static_cast<float>(acc[3]);
      if (acc[3] > 0)
        for (int c = 0; c < 3; ++c)
          out.rgb[i * 3 + c] = static_cast<float>(std::clamp(acc[c] / acc[3], 0.0, 255.0));
    }
  }
  return out;
}

/// Where a resized target lands in a background: the cutout footprint is
/// centered on the insertion point (top-left = point - floor(size / 2)).
struct Placement {
  Box footprint;  // whole resized cutout
  Box gt_bbox;    // tight bounds of the thresholded mask
};

inline Placement place(const ResizedTarget& t, Point insertion, int bg_width, int bg_height) {
  Placement p;
  const int x0 = insertion.x - t.width / 2;
  const int y0 = insertion.y - t.height / 2;
  p.footprint = Box{x0, y0, x0 + t.width, y0 + t.height};
  if (!Box{0, 0, bg_width, bg_height}.contains(p.footprint))
    fail(ErrorKind::OutOfBounds, "target at (" + std::to_string(insertion.x) + "," +
                                     std::to_string(insertion.y) + ") extends past the background");
  const Box mb = t.mask_bounds();
  if (mb.empty()) fail(ErrorKind::Degenerate, "resized target has an empty mask");
  p.gt_bbox = Box{x0 + mb.x0, y0 + mb.y0, x0 + mb.x1, y0 + mb.y1};
  return p;
}

struct TestImage {
  Image image;        // background resolution, RGB
  BinaryMask mask;    // background resolution
  Box bbox;
  std::string sub_category;
  std::string category;
};

/// Source-over blend, restricted to the ground-truth bbox so that every pixel
/// outside it keeps the background bytes. Mask = blended alpha >= 0.5.
inline TestImage composite(const Image& background, const ResizedTarget& target, Point insertion) {
  if (background.channels != 3) fail(ErrorKind::InvalidInput, "background must be RGB");
  const Placement pl = place(target, insertion, background.width, background.height);
  TestImage out;
  out.image = background;
  out.mask = BinaryMask(background.width, background.height);
  out.bbox = pl.gt_bbox;
  const int ox = pl.footprint.x0, oy = pl.footprint.y0;
  for (int y = pl.gt_bbox.y0; y < pl.gt_bbox.y1; ++y) {
    for (int x = pl.gt_bbox.x0; x < pl.gt_bbox.x1; ++x) {
      const float a = target.a(x - ox, y - oy);
      if (a <= 0.f) continue;
      const float* fg = target.color(x - ox, y - oy);
      std::uint8_t* dst = out.image.px(x, y);
      for (int c = 0; c < 3; ++c) {
        const double v = a * fg[c] + (1.0 - a) * dst[c];
        dst[c] = static_cast<std::uint8_t>(std::clamp<long long>(round_half_away(v), 0, 255));
      }
      if (a >= 0.5f) out.mask.set(x, y);
    }
  }
  return out;
}

inline TestImage composite(const Image& background, const ResizedTarget& target, Point insertion,
                           const TargetObject& object, const CategoryMap& categories) {
  TestImage t = composite(background, target, insertion);
  t.sub_category = object.category;
  t.category = categories.evaluation_category(object.category);
  return t;
}

}  // namespace aniso
