#pragma once

// Offset grids, corner-relative crop windows and the experiment manifest.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/compositor.hpp"
#include "aniso/error.hpp"
#include "aniso/geometry.hpp"
#include "aniso/png_io.hpp"
#include "aniso/scene_catalog.hpp"

namespace aniso {

inline const std::vector<int> kMasterOffsets{0,  2,  4,  7,   10,  14,  18,  24,  30,  38,
                                             46, 60, 75, 90, 120, 150, 200, 250, 300, 350};

/// Keeps offset o iff o + major <= crop / 2, so the target never passes the
/// crop center.
inline std::vector<int> offset_grid(int major_dimension, int crop_dimension,
                                    const std::vector<int>& master = kMasterOffsets) {
  if (major_dimension <= 0 || major_dimension >= crop_dimension)
    fail(ErrorKind::InvalidInput, "need 0 < major dimension < crop dimension");
  std::vector<int> out;
  for (int o : master)
    if (2LL * (static_cast<long long>(o) + major_dimension) <= crop_dimension) out.push_back(o);
  return out;
}

enum class Corner { TL, TR, BL, BR };

inline const char* to_string(Corner c) {
  switch (c) {
    case Corner::TL: return "TL";
    case Corner::TR: return "TR";
    case Corner::BL: return "BL";
    case Corner::BR: return "BR";
  }
  return "?";
}

inline Corner corner_from_string(const std::string& s) {
  if (s == "TL") return Corner::TL;
  if (s == "TR") return Corner::TR;
  if (s == "BL") return Corner::BL;
  if (s == "BR") return Corner::BR;
  fail(ErrorKind::Validation, "unknown corner '" + s + "'");
}

/// Background corner nearest the bbox center; ties prefer left, then top.
inline Corner nearest_corner(const Box& bbox, int bg_width, int bg_height) {
  const bool left = static_cast<long long>(bbox.x0) + bbox.x1 <= bg_width;
  const bool top = static_cast<long long>(bbox.y0) + bbox.y1 <= bg_height;
  if (top) return left ? Corner::TL : Corner::TR;
  return left ? Corner::BL : Corner::BR;
}

struct CropWindow {
  int x0 = 0;
  int y0 = 0;
  int side = 0;
  Corner corner = Corner::TL;
  Box box() const { return Box{x0, y0, x0 + side, y0 + side}; }
  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

/// Places a square window so the crop border on the corner's side sits dx
/// (horizontally) and dy (vertically) pixels from the nearest bbox edge.
inline CropWindow plan_crop(const Box& bbox, int bg_width, int bg_height, int dx, int dy,
                            int crop_dimension) {
  if (dx < 0 || dy < 0) fail(ErrorKind::InvalidInput, "offsets must be non-negative");
  CropWindow w;
  w.side = crop_dimension;
  w.corner = nearest_corner(bbox, bg_width, bg_height);
  const bool left = w.corner == Corner::TL || w.corner == Corner::BL;
  const bool top = w.corner == Corner::TL || w.corner == Corner::TR;
  w.x0 = left ? bbox.x0 - dx : bbox.x1 + dx - crop_dimension;
  w.y0 = top ? bbox.y0 - dy : bbox.y1 + dy - crop_dimension;
  if (!w.box().contains(bbox))
    fail(ErrorKind::InfeasibleProbe, "target does not fit in the crop at offset (" +
                                         std::to_string(dx) + "," + std::to_string(dy) + ")");
  if (!Box{0, 0, bg_width, bg_height}.contains(w.box()))
    fail(ErrorKind::InfeasibleProbe, "crop at offset (" + std::to_string(dx) + "," +
                                         std::to_string(dy) + ") exits the background");
  return w;
}

/// Distances from the bbox to the two crop borders adjacent to the corner.
inline std::pair<int, int> measured_offsets(const CropWindow& w, const Box& bbox) {
  const Box c = w.box();
  const bool left = w.corner == Corner::TL || w.corner == Corner::BL;
  const bool top = w.corner == Corner::TL || w.corner == Corner::TR;
  return {left ? bbox.x0 - c.x0 : c.x1 - bbox.x1, top ? bbox.y0 - c.y0 : c.y1 - bbox.y1};
}

// ---------------------------------------------------------------------------
// Experiment planning.

struct PlanSettings {
  std::vector<double> sizes = kDefaultSizes;
  int crop_dimension = kDefaultCropDimension;
  int margin = kDefaultMargin;
  std::vector<int> master_offsets = kMasterOffsets;
  std::uint64_t seed = 0;
  friend bool operator==(const PlanSettings&, const PlanSettings&) = default;
};

struct TestImageSpec {
  std::string id;
  std::string scene_id;
  std::string target_id;
  double size = 0;  // proportion of the crop dimension
  int major = 0;    // nominal major dimension, round(size * crop)
  Point insertion;
  Box footprint;
  Box gt_bbox;
  std::string sub_category;
  std::string category;
  friend bool operator==(const TestImageSpec&, const TestImageSpec&) = default;
};

struct ProbeSpec {
  std::string id;
  std::string test_image_id;
  double size = 0;
  int dx = 0;
  int dy = 0;
  CropWindow window;
  friend bool operator==(const ProbeSpec&, const ProbeSpec&) = default;
};

struct SkippedProbe {
  std::string test_image_id;
  int dx = 0;
  int dy = 0;
  std::string reason;
  friend bool operator==(const SkippedProbe&, const SkippedProbe&) = default;
};

struct ExperimentPlan {
  PlanSettings settings;
  std::size_t pair_count = 0;
  std::vector<TestImageSpec> test_images;
  std::vector<ProbeSpec> probes;
  std::vector<SkippedProbe> skipped;

  const TestImageSpec& test_image(const std::string& id) const {
    auto it = std::lower_bound(test_images.begin(), test_images.end(), id,
                               [](const TestImageSpec& t, const std::string& k) { return t.id < k; });
    if (it == test_images.end() || it->id != id)
      fail(ErrorKind::InvalidInput, "no test image '" + id + "' in plan");
    return *it;
  }
  friend bool operator==(const ExperimentPlan&, const ExperimentPlan&) = default;
};

namespace detail {
inline std::string padded(int v, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << v;
  return os.str();
}
}  // namespace detail

inline std::string test_image_id(const std::string& scene, const std::string& target, int major) {
  return scene + "__" + target + "__s" + detail::padded(major, 3);
}

inline std::string probe_id(const std::string& test_image, int dx, int dy) {
  return test_image + "__x" + detail::padded(dx, 3) + "_y" + detail::padded(dy, 3);
}

/// Resized cutouts for every (target, size), loaded once.
class ResizedTargetCache {
 public:
  ResizedTargetCache(const SceneCatalog& catalog, const std::vector<double>& sizes, int crop)
      : catalog_(catalog), sizes_(sizes), crop_(crop) {}

  const ResizedTarget& get(const std::string& target_id, double size) {
    auto key = std::make_pair(target_id, size);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Image rgba = png::read(catalog_.resolve(catalog_.target(target_id).rgba_path), 4);
    for (double s : sizes_) cache_.emplace(std::make_pair(target_id, s), resize_target(rgba, s, crop_));
    if (!cache_.count(key)) cache_.emplace(key, resize_target(rgba, size, crop_));
    return cache_.at(key);
  }

 private:
  const SceneCatalog& catalog_;
  std::vector<double> sizes_;
  int crop_;
  std::map<std::pair<std::string, double>, ResizedTarget> cache_;
};

/// One insertion point per compatible (background, target) pair, one test
/// image per size, one probe per offset cell. Deterministic given the seed.
inline ExperimentPlan plan_experiment(const SceneCatalog& catalog, const PlanSettings& settings) {
  if (settings.sizes.empty()) fail(ErrorKind::InvalidInput, "no target sizes configured");
  ExperimentPlan plan;
  plan.settings = settings;
  ResizedTargetCache cache(catalog, settings.sizes, settings.crop_dimension);

  for (const auto& pair : compatible_pairs(catalog, settings.margin)) {
    const auto& scene = catalog.backgrounds[pair.scene_index];
    const auto& target = catalog.targets[pair.target_index];
    ++plan.pair_count;
    const PixelRegion region = compatible_region(scene, target.category, settings.margin);
    const Point at = sample_insertion_point(region, insertion_key(scene.id, target.id, settings.seed));

    for (double size : settings.sizes) {
      const int major = major_dimension(size, settings.crop_dimension);
      const Placement pl = place(cache.get(target.id, size), at, scene.width, scene.height);
      TestImageSpec ti;
      ti.scene_id = scene.id;
      ti.target_id = target.id;
      ti.id = test_image_id(scene.id, target.id, major);
      ti.size = size;
      ti.major = major;
      ti.insertion = at;
      ti.footprint = pl.footprint;
      ti.gt_bbox = pl.gt_bbox;
      ti.sub_category = target.category;
      ti.category = catalog.category_map.evaluation_category(target.category);

      const auto grid = offset_grid(major, settings.crop_dimension, settings.master_offsets);
      for (int dx : grid) {
        for (int dy : grid) {
          try {
            ProbeSpec p;
            p.window = plan_crop(ti.gt_bbox, scene.width, scene.height, dx, dy,
                                 settings.crop_dimension);
            p.id = probe_id(ti.id, dx, dy);
            p.test_image_id = ti.id;
            p.size = size;
            p.dx = dx;
            p.dy = dy;
            plan.probes.push_back(std::move(p));
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::InfeasibleProbe) throw;
            plan.skipped.push_back({ti.id, dx, dy, e.what()});
          }
        }
      }
      plan.test_images.push_back(std::move(ti));
    }
  }

  std::sort(plan.test_images.begin(), plan.test_images.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < plan.test_images.size(); ++i)
    if (plan.test_images[i].id == plan.test_images[i - 1].id)
      fail(ErrorKind::Validation, "two sizes map to the same test image id '" +
                                      plan.test_images[i].id + "'");
  auto by_cell = [](const auto& a, const auto& b) {
    if (a.test_image_id != b.test_image_id) return a.test_image_id < b.test_image_id;
    if (a.dx != b.dx) return a.dx < b.dx;
    return a.dy < b.dy;
  };
  std::sort(plan.probes.begin(), plan.probes.end(), by_cell);
  std::sort(plan.skipped.begin(), plan.skipped.end(), by_cell);
  return plan;
}

// ---------------------------------------------------------------------------
// On-disk form: plan.json (settings) plus one JSON record per line in
// test_images.jsonl, probes.jsonl and skipped.jsonl.

inline nlohmann::json box_json(const Box& b) { return {b.x0, b.y0, b.x1, b.y1}; }
inline Box box_from_json(const nlohmann::json& j) {
  return Box{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

inline nlohmann::json to_json(const PlanSettings& s) {
  return {{"sizes", s.sizes},
          {"crop_dimension", s.crop_dimension},
          {"margin", s.margin},
          {"master_offsets", s.master_offsets},
          {"seed", s.seed}};
}

inline PlanSettings settings_from_json(const nlohmann::json& j) {
  PlanSettings s;
  s.sizes = j.at("sizes").get<std::vector<double>>();
  s.crop_dimension = j.at("crop_dimension").get<int>();
  s.margin = j.at("margin").get<int>();
  s.master_offsets = j.at("master_offsets").get<std::vector<int>>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

inline nlohmann::json to_json(const TestImageSpec& t) {
  return {{"id", t.id},
          {"scene_id", t.scene_id},
          {"target_id", t.target_id},
          {"size", t.size},
          {"major", t.major},
          {"insertion", {t.insertion.x, t.insertion.y}},
          {"footprint", box_json(t.footprint)},
          {"gt_bbox", box_json(t.gt_bbox)},
          {"sub_category", t.sub_category},
          {"category", t.category}};
}

inline TestImageSpec test_image_from_json(const nlohmann::json& j) {
  TestImageSpec t;
  t.id = j.at("id").get<std::string>();
  t.scene_id = j.at("scene_id").get<std::string>();
  t.target_id = j.at("target_id").get<std::string>();
  t.size = j.at("size").get<double>();
  t.major = j.at("major").get<int>();
  t.insertion = Point{j.at("insertion").at(0).get<int>(), j.at("insertion").at(1).get<int>()};
  t.footprint = box_from_json(j.at("footprint"));
  t.gt_bbox = box_from_json(j.at("gt_bbox"));
  t.sub_category = j.at("sub_category").get<std::string>();
  t.category = j.at("category").get<std::string>();
  return t;
}

inline nlohmann::json to_json(const ProbeSpec& p) {
  return {{"id", p.id},
          {"test_image_id", p.test_image_id},
          {"size", p.size},
          {"dx", p.dx},
          {"dy", p.dy},
          {"corner", to_string(p.window.corner)},
          {"window", {p.window.x0, p.window.y0, p.window.side}}};
}

inline ProbeSpec probe_from_json(const nlohmann::json& j) {
  ProbeSpec p;
  p.id = j.at("id").get<std::string>();
  p.test_image_id = j.at("test_image_id").get<std::string>();
  p.size = j.at("size").get<double>();
  p.dx = j.at("dx").get<int>();
  p.dy = j.at("dy").get<int>();
  p.window.corner = corner_from_string(j.at("corner").get<std::string>());
  p.window.x0 = j.at("window").at(0).get<int>();
  p.window.y0 = j.at("window").at(1).get<int>();
  p.window.side = j.at("window").at(2).get<int>();
  return p;
}

inline nlohmann::json to_json(const SkippedProbe& s) {
  return {{"test_image_id", s.test_image_id}, {"dx", s.dx}, {"dy", s.dy}, {"reason", s.reason}};
}

inline SkippedProbe skipped_from_json(const nlohmann::json& j) {
  return {j.at("test_image_id").get<std::string>(), j.at("dx").get<int>(), j.at("dy").get<int>(),
          j.at("reason").get<std::string>()};
}

namespace detail {

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& item : items) out << to_json(item).dump() << '\n';
}

template <typename F>
void read_jsonl(const std::filesystem::path& path, F&& on_record) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingArtifact, "missing " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      on_record(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Validation,
           path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace detail

inline void write_plan(const ExperimentPlan& plan, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "plan.json", std::ios::binary);
    nlohmann::json j{{"settings", to_json(plan.settings)},
                     {"pair_count", plan.pair_count},
                     {"test_image_count", plan.test_images.size()},
                     {"probe_count", plan.probes.size()},
                     {"skipped_count", plan.skipped.size()}};
    nlohmann::json grids = nlohmann::json::object();
    for (double s : plan.settings.sizes) {
      const int major = major_dimension(s, plan.settings.crop_dimension);
      grids[std::to_string(major)] =
          offset_grid(major, plan.settings.crop_dimension, plan.settings.master_offsets);
    }
    j["grids"] = grids;
    out << j.dump(2) << '\n';
  }
  detail::write_jsonl(dir / "test_images.jsonl", plan.test_images);
  detail::write_jsonl(dir / "probes.jsonl", plan.probes);
  detail::write_jsonl(dir / "skipped.jsonl", plan.skipped);
}

inline ExperimentPlan read_plan(const std::filesystem::path& dir) {
  ExperimentPlan plan;
  std::ifstream in(dir / "plan.json");
  if (!in) fail(ErrorKind::MissingArtifact, "missing plan " + (dir / "plan.json").string() +
                                                 " (run 'plan' first)");
  try {
    nlohmann::json j;
    in >> j;
    plan.settings = settings_from_json(j.at("settings"));
    plan.pair_count = j.at("pair_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, "malformed plan.json: " + std::string(e.what()));
  }
  detail::read_jsonl(dir / "test_images.jsonl",
                     [&](const nlohmann::json& j) { plan.test_images.push_back(test_image_from_json(j)); });
  detail::read_jsonl(dir / "probes.jsonl",
                     [&](const nlohmann::json& j) { plan.probes.push_back(probe_from_json(j)); });
  detail::read_jsonl(dir / "skipped.jsonl",
                     [&](const nlohmann::json& j) { plan.skipped.push_back(skipped_from_json(j)); });
  return plan;
}

}  // namespace aniso
