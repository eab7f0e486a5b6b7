#pragma once

// Backgrounds, insertion regions, target cutouts and the sub-category
// collapse map, loaded from <root>/catalog.json.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/error.hpp"
#include "aniso/geometry.hpp"
#include "aniso/png_io.hpp"
#include "aniso/region.hpp"
#include "aniso/rng.hpp"

namespace aniso {

inline constexpr int kMinBackgroundSide = 1600;
inline constexpr int kMinTargetMajor = 50;
inline constexpr int kDefaultMargin = 400;
/// Alpha at or above this (of 255) counts as part of the object mask.
inline constexpr int kMaskAlpha = 128;

inline const char* const kCatalogManifest = "catalog.json";

struct InsertionRegion {
  Polygon polygon;
  std::set<std::string> allowed_categories;
  friend bool operator==(const InsertionRegion&, const InsertionRegion&) = default;
};

struct BackgroundScene {
  std::string id;
  std::string image_path;  // relative to the catalog root
  int width = 0;
  int height = 0;
  std::vector<InsertionRegion> regions;
  friend bool operator==(const BackgroundScene&, const BackgroundScene&) = default;
};

struct TargetObject {
  std::string id;
  std::string category;
  std::string rgba_path;  // relative to the catalog root
  int native_width = 0;   // tight bounds of the alpha mask
  int native_height = 0;
  int native_major() const { return std::max(native_width, native_height); }
  friend bool operator==(const TargetObject&, const TargetObject&) = default;
};

class CategoryMap {
 public:
  CategoryMap() = default;
  explicit CategoryMap(std::map<std::string, std::string> m) : map_(std::move(m)) {}

  bool contains(const std::string& sub) const { return map_.count(sub) != 0; }

  const std::string& evaluation_category(const std::string& sub) const {
    auto it = map_.find(sub);
    if (it == map_.end()) fail(ErrorKind::Validation, "unknown category '" + sub + "'");
    return it->second;
  }

  const std::map<std::string, std::string>& entries() const { return map_; }
  friend bool operator==(const CategoryMap&, const CategoryMap&) = default;

 private:
  std::map<std::string, std::string> map_;
};

struct SceneCatalog {
  std::filesystem::path root;
  std::vector<BackgroundScene> backgrounds;
  std::vector<TargetObject> targets;
  CategoryMap category_map;

  const BackgroundScene& scene(const std::string& id) const {
    for (const auto& b : backgrounds)
      if (b.id == id) return b;
    fail(ErrorKind::InvalidInput, "no background with id '" + id + "'");
  }
  const TargetObject& target(const std::string& id) const {
    for (const auto& t : targets)
      if (t.id == id) return t;
    fail(ErrorKind::InvalidInput, "no target with id '" + id + "'");
  }
  std::filesystem::path resolve(const std::string& rel) const { return root / rel; }
};

// ---------------------------------------------------------------------------
// Geometry on regions.

inline Box interior(int width, int height, int margin) {
  return Box{margin, margin, width - margin, height - margin};
}

/// Region pixels at least `margin` pixels from every border of the scene.
inline PixelRegion effective_region(const InsertionRegion& region, const BackgroundScene& scene,
                                    int margin = kDefaultMargin) {
  if (margin < 0) fail(ErrorKind::InvalidInput, "margin must be >= 0");
  return rasterize(region.polygon, interior(scene.width, scene.height, margin));
}

inline PixelRegion effective_region(const PixelRegion& region, int width, int height,
                                    int margin = kDefaultMargin) {
  if (margin < 0) fail(ErrorKind::InvalidInput, "margin must be >= 0");
  return region.clipped(interior(width, height, margin));
}

/// Union of the effective regions that admit `category`.
inline PixelRegion compatible_region(const BackgroundScene& scene, const std::string& category,
                                     int margin = kDefaultMargin) {
  PixelRegion acc;
  for (const auto& r : scene.regions)
    if (r.allowed_categories.count(category)) acc = acc.united(effective_region(r, scene, margin));
  return acc;
}

/// Sampling key for the insertion location of one (background, target) pair.
inline std::uint64_t insertion_key(const std::string& scene_id, const std::string& target_id,
                                   std::uint64_t seed) {
  return combine(combine(hash_string(scene_id), hash_string(target_id)), seed);
}

inline Point sample_insertion_point(const PixelRegion& region, std::uint64_t key) {
  return sample_point(region, key);
}

// ---------------------------------------------------------------------------
// Serialization.

inline nlohmann::json to_json(const SceneCatalog& c) {
  nlohmann::json j;
  j["backgrounds"] = nlohmann::json::array();
  for (const auto& b : c.backgrounds) {
    nlohmann::json jb{{"id", b.id}, {"path", b.image_path}, {"width", b.width}, {"height", b.height}};
    jb["regions"] = nlohmann::json::array();
    for (const auto& r : b.regions) {
      nlohmann::json poly = nlohmann::json::array();
      for (const auto& p : r.polygon) poly.push_back({p.x, p.y});
      jb["regions"].push_back({{"polygon", poly}, {"categories", r.allowed_categories}});
    }
    j["backgrounds"].push_back(jb);
  }
  j["targets"] = nlohmann::json::array();
  for (const auto& t : c.targets)
    j["targets"].push_back({{"id", t.id},
                            {"path", t.rgba_path},
                            {"category", t.category},
                            {"width", t.native_width},
                            {"height", t.native_height}});
  j["category_map"] = c.category_map.entries();
  return j;
}

/// Structural parse; no file access. Image-derived fields keep whatever the
/// document states (0 when absent).
inline SceneCatalog parse_catalog(const nlohmann::json& j, std::filesystem::path root) {
  SceneCatalog c;
  c.root = std::move(root);
  try {
    for (const auto& jb : j.at("backgrounds")) {
      BackgroundScene b;
      b.id = jb.at("id").get<std::string>();
      b.image_path = jb.at("path").get<std::string>();
      b.width = jb.value("width", 0);
      b.height = jb.value("height", 0);
      for (const auto& jr : jb.value("regions", nlohmann::json::array())) {
        InsertionRegion r;
        for (const auto& v : jr.at("polygon")) r.polygon.push_back(Point{v.at(0).get<int>(), v.at(1).get<int>()});
        for (const auto& cat : jr.at("categories")) r.allowed_categories.insert(cat.get<std::string>());
        b.regions.push_back(std::move(r));
      }
      c.backgrounds.push_back(std::move(b));
    }
    for (const auto& jt : j.at("targets")) {
      TargetObject t;
      t.id = jt.at("id").get<std::string>();
      t.rgba_path = jt.at("path").get<std::string>();
      t.category = jt.at("category").get<std::string>();
      t.native_width = jt.value("width", 0);
      t.native_height = jt.value("height", 0);
      c.targets.push_back(std::move(t));
    }
    c.category_map = CategoryMap(j.at("category_map").get<std::map<std::string, std::string>>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed catalog manifest: ") + e.what());
  }
  return c;
}

/// Tight bounds of alpha >= kMaskAlpha in an RGBA image.
inline Box alpha_bounds(const Image& rgba) {
  Box b{rgba.width, rgba.height, 0, 0};
  for (int y = 0; y < rgba.height; ++y)
    for (int x = 0; x < rgba.width; ++x)
      if (rgba.px(x, y)[3] >= kMaskAlpha) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x + 1);
        b.y1 = std::max(b.y1, y + 1);
      }
  return b.empty() ? Box{} : b;
}

/// Checks the data model without touching files.
inline void validate_structure(const SceneCatalog& c) {
  std::set<std::string> ids;
  for (const auto& b : c.backgrounds) {
    if (!ids.insert("b:" + b.id).second) fail(ErrorKind::Validation, "background '" + b.id + "': duplicate id");
    if (b.width < kMinBackgroundSide || b.height < kMinBackgroundSide)
      fail(ErrorKind::Validation, "background '" + b.id + "': background too small (" +
                                      std::to_string(b.width) + "x" + std::to_string(b.height) +
                                      ", need at least " + std::to_string(kMinBackgroundSide) +
                                      " on both sides)");
    for (std::size_t ri = 0; ri < b.regions.size(); ++ri) {
      const auto& r = b.regions[ri];
      const std::string where = "background '" + b.id + "' region " + std::to_string(ri);
      if (!is_simple(r.polygon)) fail(ErrorKind::Validation, where + ": degenerate polygon");
      for (const auto& p : r.polygon)
        if (p.x < 0 || p.y < 0 || p.x > b.width || p.y > b.height)
          fail(ErrorKind::Validation, where + ": vertex outside the image");
      if (r.allowed_categories.empty()) fail(ErrorKind::Validation, where + ": no allowed categories");
      for (const auto& cat : r.allowed_categories)
        if (!c.category_map.contains(cat))
          fail(ErrorKind::Validation, where + ": unknown category '" + cat + "'");
    }
  }
  for (const auto& t : c.targets) {
    if (!ids.insert("t:" + t.id).second) fail(ErrorKind::Validation, "target '" + t.id + "': duplicate id");
    if (!c.category_map.contains(t.category))
      fail(ErrorKind::Validation, "target '" + t.id + "': unknown category '" + t.category + "'");
    if (t.native_major() < kMinTargetMajor)
      fail(ErrorKind::Validation, "target '" + t.id + "': native major dimension " +
                                      std::to_string(t.native_major()) + " below " +
                                      std::to_string(kMinTargetMajor));
  }
}

/// Reads <root>/catalog.json, decodes every referenced image, fills in
/// image-derived dimensions, then validates.
inline SceneCatalog load_catalog(const std::filesystem::path& root) {
  const auto manifest = root / kCatalogManifest;
  std::ifstream in(manifest);
  if (!in) fail(ErrorKind::MissingArtifact, "missing catalog manifest " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, "catalog manifest is not valid JSON: " + std::string(e.what()));
  }
  SceneCatalog c = parse_catalog(j, root);

  auto decode = [&](const std::string& kind, const std::string& id, const std::string& rel,
                    int channels) {
    const auto path = c.resolve(rel);
    if (!std::filesystem::exists(path))
      fail(ErrorKind::Validation, kind + " '" + id + "': missing file " + path.string());
    try {
      return png::read(path, channels);
    } catch (const Error& e) {
      fail(ErrorKind::Validation, kind + " '" + id + "': cannot decode: " + e.what());
    }
  };

  for (auto& b : c.backgrounds) {
    Image img = decode("background", b.id, b.image_path, 3);
    if ((b.width && b.width != img.width) || (b.height && b.height != img.height))
      fail(ErrorKind::Validation, "background '" + b.id + "': stated size does not match image");
    b.width = img.width;
    b.height = img.height;
  }
  for (auto& t : c.targets) {
    Image img = decode("target", t.id, t.rgba_path, 4);
    Box bb = alpha_bounds(img);
    if (bb.empty()) fail(ErrorKind::Validation, "target '" + t.id + "': alpha mask is empty");
    if ((t.native_width && t.native_width != bb.width()) ||
        (t.native_height && t.native_height != bb.height()))
      fail(ErrorKind::Validation, "target '" + t.id + "': stated size does not match alpha mask");
    t.native_width = bb.width();
    t.native_height = bb.height();
  }
  validate_structure(c);
  return c;
}

inline void save_catalog(const SceneCatalog& c, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  std::ofstream out(root / kCatalogManifest);
  out << to_json(c).dump(2) << '\n';
}

/// Background/target pairs with a non-empty compatible region, in catalog order.
struct CompatiblePair {
  std::size_t scene_index = 0;
  std::size_t target_index = 0;
};

inline std::vector<CompatiblePair> compatible_pairs(const SceneCatalog& c, int margin) {
  std::vector<CompatiblePair> out;
  for (std::size_t bi = 0; bi < c.backgrounds.size(); ++bi)
    for (std::size_t ti = 0; ti < c.targets.size(); ++ti)
      if (!compatible_region(c.backgrounds[bi], c.targets[ti].category, margin).empty())
        out.push_back({bi, ti});
  return out;
}

}  // namespace aniso
