#pragma once

// Synthetic catalogs: procedural backgrounds and soft-edged cutouts, for
// demos and tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "aniso/image.hpp"
#include "aniso/png_io.hpp"
#include "aniso/rng.hpp"
#include "aniso/scene_catalog.hpp"

namespace aniso::fixture {

struct Options {
  int scenes = 4;
  int targets = 6;
  int width = 1600;
  int height = 1600;
  std::uint64_t seed = 1;
  int compression = 1;
};

inline const std::vector<std::string> kSubCategories{"bird_flying", "cat", "ship", "dog", "cow",
                                                     "airplane", "bird_walking", "boat"};

inline CategoryMap default_category_map() {
  return CategoryMap({{"airplane", "airplane"},
                      {"bird_flying", "bird"},
                      {"bird_swimming", "bird"},
                      {"bird_walking", "bird"},
                      {"boat", "boat"},
                      {"cat", "cat"},
                      {"cow", "cow"},
                      {"dog", "dog"},
                      {"ship", "boat"}});
}

inline Image background(int w, int h, std::uint64_t key) {
  CounterRng rng(key);
  const double fx = 0.002 + 0.004 * rng.uniform(), fy = 0.002 + 0.004 * rng.uniform();
  const int base[3] = {static_cast<int>(rng.below(128)), static_cast<int>(rng.below(128)),
                       static_cast<int>(rng.below(128))};
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t* p = img.px(x, y);
      const double wave = 40.0 * std::sin(x * fx) * std::cos(y * fy);
      const std::uint64_t n = mix64(key ^ (static_cast<std::uint64_t>(y) << 32 | static_cast<unsigned>(x)));
      for (int c = 0; c < 3; ++c)
        p[c] = static_cast<std::uint8_t>(
            std::clamp(base[c] + 60 + wave + static_cast<int>((n >> (8 * c)) & 15), 0.0, 255.0));
    }
  return img;
}

/// Ellipse with a one-pixel soft rim; ellipse axes are (w/2, h/2).
inline Image cutout(int w, int h, std::uint64_t key, int pad = 4) {
  CounterRng rng(key);
  const std::uint8_t col[3] = {static_cast<std::uint8_t>(128 + rng.below(128)),
                               static_cast<std::uint8_t>(rng.below(256)),
                               static_cast<std::uint8_t>(rng.below(128))};
  Image img(w + 2 * pad, h + 2 * pad, 4, 0);
  const double cx = pad + w / 2.0, cy = pad + h / 2.0, rx = w / 2.0, ry = h / 2.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const double r = std::sqrt(dx * dx + dy * dy);
      // Signed distance in pixels (approx.) to the rim.
      const double edge = (1.0 - r) * std::min(rx, ry);
      const double a = std::clamp(edge + 0.5, 0.0, 1.0);
      std::uint8_t* p = img.px(x, y);
      p[0] = col[0];
      p[1] = static_cast<std::uint8_t>((col[1] + x) & 0xff);
      p[2] = col[2];
      p[3] = static_cast<std::uint8_t>(std::lround(a * 255));
    }
  return img;
}

/// Writes a catalog whose scenes each carry one large central region plus an
/// L-shaped region, both admitting every sub-category used by the targets.
inline SceneCatalog make_catalog(const std::filesystem::path& root, const Options& opt = {}) {
  SceneCatalog c;
  c.root = root;
  c.category_map = default_category_map();
  std::filesystem::create_directories(root / "backgrounds");
  std::filesystem::create_directories(root / "targets");

  std::set<std::string> used;
  for (int t = 0; t < opt.targets; ++t) {
    TargetObject obj;
    obj.id = "t" + std::to_string(t);
    obj.category = kSubCategories[t % kSubCategories.size()];
    used.insert(obj.category);
    CounterRng rng(combine(opt.seed, 1000 + t));
    const int w = 60 + static_cast<int>(rng.below(140));
    const int h = 60 + static_cast<int>(rng.below(140));
    Image img = cutout(w, h, combine(opt.seed, 2000 + t));
    obj.rgba_path = "targets/" + obj.id + ".png";
    png::write(root / obj.rgba_path, img, opt.compression);
    const Box bb = alpha_bounds(img);
    obj.native_width = bb.width();
    obj.native_height = bb.height();
    c.targets.push_back(obj);
  }

  for (int s = 0; s < opt.scenes; ++s) {
    BackgroundScene b;
    b.id = "b" + std::to_string(s);
    b.width = opt.width;
    b.height = opt.height;
    b.image_path = "backgrounds/" + b.id + ".png";
    png::write(root / b.image_path, background(opt.width, opt.height, combine(opt.seed, s)),
               opt.compression);
    const int w = opt.width, h = opt.height;
    InsertionRegion central;
    central.polygon = {{w / 8, h / 8}, {w - w / 8, h / 8}, {w - w / 8, h - h / 8}, {w / 8, h - h / 8}};
    central.allowed_categories = used;
    InsertionRegion ell;
    ell.polygon = {{w / 4, h / 4}, {w / 2, h / 4}, {w / 2, h / 2}, {3 * w / 4, h / 2},
                   {3 * w / 4, 3 * h / 4}, {w / 4, 3 * h / 4}};
    ell.allowed_categories = used;
    b.regions = {central, ell};
    c.backgrounds.push_back(b);
  }
  save_catalog(c, root);
  return c;
}

}  // namespace aniso::fixture
