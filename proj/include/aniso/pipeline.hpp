#pragma once

// Stage-and-artifact pipeline. Every stage reads and writes files under the
// run's output root, so an external detector can run between `generate`
// and `evaluate`:
//
//   <out>/plan/            plan.json, test_images.jsonl, probes.jsonl, skipped.jsonl
//   <out>/test_images/     <id>.png, <id>_mask.png, <id>.json
//   <exchange>/            manifest.json, probes/<probe>.png, preds/<shard>.jsonl
//   <out>/eval/            cells.csv, matches.jsonl, summary.json
//   <out>/report/          heatmap_<metric>_<size>.png/.csv

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/compositor.hpp"
#include "aniso/detector_protocol.hpp"
#include "aniso/error.hpp"
#include "aniso/metrics.hpp"
#include "aniso/mock_detector.hpp"
#include "aniso/parallel.hpp"
#include "aniso/png_io.hpp"
#include "aniso/probe_planner.hpp"
#include "aniso/reporting.hpp"
#include "aniso/scene_catalog.hpp"

namespace aniso {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path catalog_root;
  fs::path output_root = "run";
  fs::path exchange_dir;  // empty: <output_root>/exchange
  PlanSettings plan;
  unsigned workers = 1;
  DegradationProfile mock;
  std::uint64_t mock_seed = 0;
  int png_compression = 3;
  bool write_crops = true;  // the mock detector only needs the gt masks

  fs::path plan_dir() const { return output_root / "plan"; }
  fs::path images_dir() const { return output_root / "test_images"; }
  fs::path exchange() const { return exchange_dir.empty() ? output_root / "exchange" : exchange_dir; }
  fs::path eval_dir() const { return output_root / "eval"; }
  fs::path report_dir() const { return output_root / "report"; }
};

/// Applies the keys present in a JSON config document on top of `cfg`.
inline void apply_config(RunConfig& cfg, const nlohmann::json& j) {
  try {
    if (j.contains("catalog")) cfg.catalog_root = j.at("catalog").get<std::string>();
    if (j.contains("output")) cfg.output_root = j.at("output").get<std::string>();
    if (j.contains("exchange")) cfg.exchange_dir = j.at("exchange").get<std::string>();
    if (j.contains("sizes")) cfg.plan.sizes = j.at("sizes").get<std::vector<double>>();
    if (j.contains("crop_dimension")) cfg.plan.crop_dimension = j.at("crop_dimension").get<int>();
    if (j.contains("margin")) cfg.plan.margin = j.at("margin").get<int>();
    if (j.contains("offsets")) cfg.plan.master_offsets = j.at("offsets").get<std::vector<int>>();
    if (j.contains("seed")) cfg.plan.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<unsigned>();
    if (j.contains("mock")) cfg.mock = profile_from_json(j.at("mock"));
    if (j.contains("mock_seed")) cfg.mock_seed = j.at("mock_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, "bad config: " + std::string(e.what()));
  }
}

inline void validate_config(const RunConfig& cfg) {
  if (cfg.plan.crop_dimension < 1) fail(ErrorKind::Validation, "crop dimension must be >= 1");
  if (cfg.plan.margin < 0) fail(ErrorKind::Validation, "margin must be >= 0");
  if (cfg.plan.sizes.empty()) fail(ErrorKind::Validation, "at least one size is required");
  for (double s : cfg.plan.sizes)
    if (!(s > 0 && s < 1)) fail(ErrorKind::Validation, "sizes must lie in (0, 1)");
  for (std::size_t i = 0; i < cfg.plan.master_offsets.size(); ++i)
    if (cfg.plan.master_offsets[i] < 0 || (i && cfg.plan.master_offsets[i] <= cfg.plan.master_offsets[i - 1]))
      fail(ErrorKind::Validation, "offsets must be non-negative and strictly increasing");
  cfg.mock.validate();
}

// ---------------------------------------------------------------------------

struct PlanSummary {
  std::size_t pairs = 0;
  std::size_t test_images = 0;
  std::size_t probes = 0;
  std::size_t skipped = 0;
};

inline PlanSummary run_plan(const RunConfig& cfg) {
  validate_config(cfg);
  const SceneCatalog catalog = load_catalog(cfg.catalog_root);
  const ExperimentPlan plan = plan_experiment(catalog, cfg.plan);
  write_plan(plan, cfg.plan_dir());
  return {plan.pair_count, plan.test_images.size(), plan.probes.size(), plan.skipped.size()};
}

inline nlohmann::json sidecar(const TestImageSpec& t) { return to_json(t); }

/// Composites every test image, writes image/mask/sidecar, crops every probe
/// into the exchange directory (unless disabled) and writes the probe manifest.
inline ProbeManifest run_generate(const RunConfig& cfg) {
  validate_config(cfg);
  const ExperimentPlan plan = read_plan(cfg.plan_dir());
  const SceneCatalog catalog = load_catalog(cfg.catalog_root);
  const fs::path ex = cfg.exchange();
  fs::create_directories(ex / "probes");
  fs::create_directories(cfg.images_dir());

  std::map<std::string, std::vector<const ProbeSpec*>> probes_of;
  for (const auto& p : plan.probes) probes_of[p.test_image_id].push_back(&p);

  std::mutex cache_mu;
  ResizedTargetCache cache(catalog, plan.settings.sizes, plan.settings.crop_dimension);

  parallel_for(plan.test_images.size(), cfg.workers, [&](std::size_t i) {
    const TestImageSpec& t = plan.test_images[i];
    const auto& scene = catalog.scene(t.scene_id);
    const Image bg = png::read(catalog.resolve(scene.image_path), 3);
    ResizedTarget resized;
    {
      std::lock_guard lock(cache_mu);
      resized = cache.get(t.target_id, t.size);
    }
    TestImage ti = composite(bg, resized, t.insertion, catalog.target(t.target_id), catalog.category_map);
    if (ti.bbox != t.gt_bbox)
      fail(ErrorKind::Validation, "test image '" + t.id + "' no longer matches its plan (catalog changed?)");
    png::write(cfg.images_dir() / (t.id + ".png"), ti.image, cfg.png_compression);
    png::write_mask(cfg.images_dir() / (t.id + "_mask.png"), ti.mask, cfg.png_compression);
    std::ofstream(cfg.images_dir() / (t.id + ".json"), std::ios::binary) << sidecar(t).dump(2) << '\n';
    if (cfg.write_crops)
      for (const ProbeSpec* p : probes_of[t.id])
        png::write(ex / crop_relpath(p->id), crop(ti.image, p->window.box()), cfg.png_compression);
  });

  ProbeManifest m;
  m.metadata = {{"seed", plan.settings.seed},
                {"sizes", plan.settings.sizes},
                {"crop_dimension", plan.settings.crop_dimension},
                {"offsets", plan.settings.master_offsets}};
  for (const auto& p : plan.probes)
    m.probes.push_back({p.id, crop_relpath(p.id), p.window.side, p.window.side});
  return write_manifest(std::move(m), ex);
}

/// Ground-truth mask of a test image as materialized by `generate`.
inline BinaryMask load_gt_mask(const RunConfig& cfg, const std::string& test_image_id) {
  const fs::path p = cfg.images_dir() / (test_image_id + "_mask.png");
  if (!fs::exists(p))
    fail(ErrorKind::MissingArtifact, "missing ground-truth mask " + p.string() + " (run 'generate' first)");
  return png::read_mask(p);
}

/// Mock detector over every probe; writes <exchange>/preds/mock.jsonl.
inline std::size_t run_mock(const RunConfig& cfg) {
  validate_config(cfg);
  const ExperimentPlan plan = read_plan(cfg.plan_dir());
  const ProbeManifest manifest = read_manifest(cfg.exchange());
  std::map<std::string, std::vector<const ProbeSpec*>> probes_of;
  for (const auto& p : plan.probes) probes_of[p.test_image_id].push_back(&p);

  std::vector<std::vector<PredictionRecord>> per_image(plan.test_images.size());
  parallel_for(plan.test_images.size(), cfg.workers, [&](std::size_t i) {
    const TestImageSpec& t = plan.test_images[i];
    const BinaryMask gt = load_gt_mask(cfg, t.id);
    for (const ProbeSpec* p : probes_of[t.id]) {
      if (!manifest.find(p->id))
        fail(ErrorKind::Validation, "probe '" + p->id + "' missing from the manifest");
      auto recs = mock_detect({p->id, p->dx, p->dy}, gt.window(p->window.box()), t.category,
                              cfg.mock, cfg.mock_seed);
      for (auto& r : recs) per_image[i].push_back(std::move(r));
    }
  });

  const fs::path shard = cfg.exchange() / "preds" / "mock.jsonl";
  fs::remove(shard);
  std::size_t n = 0;
  std::vector<PredictionRecord> all;
  for (auto& v : per_image)
    for (auto& r : v) all.push_back(std::move(r)), ++n;
  write_predictions(all, cfg.exchange(), "mock");
  return n;
}

struct EvalSummary {
  std::size_t probes = 0;
  std::size_t covered = 0;  // probes with at least one prediction record
  std::size_t records = 0;
  std::size_t skipped = 0;
  double coverage() const { return probes ? static_cast<double>(covered) / probes : 0.0; }
};

inline nlohmann::json to_json(const MatchedResult& r) {
  auto hit = [](const std::optional<Hit>& h) -> nlohmann::json {
    if (!h) return nullptr;
    return {{"confidence", h->confidence}, {"iou", h->iou}, {"label", h->label}};
  };
  return {{"probe_id", r.probe_id}, {"top", hit(r.top)}, {"accurate", hit(r.accurate)}};
}

/// Matches predictions against ground truth for every planned probe and
/// writes per-cell metrics. Probes without predictions count as misses.
inline EvalSummary run_evaluate(const RunConfig& cfg) {
  validate_config(cfg);
  const ExperimentPlan plan = read_plan(cfg.plan_dir());
  const ProbeManifest manifest = read_manifest(cfg.exchange());
  const PredictionSet preds = read_predictions(cfg.exchange(), manifest);

  std::map<std::string, std::vector<std::size_t>> probes_of;
  for (std::size_t i = 0; i < plan.probes.size(); ++i)
    probes_of[plan.probes[i].test_image_id].push_back(i);

  std::vector<MatchedResult> results(plan.probes.size());
  parallel_for(plan.test_images.size(), cfg.workers, [&](std::size_t i) {
    const TestImageSpec& t = plan.test_images[i];
    const BinaryMask gt = load_gt_mask(cfg, t.id);
    for (std::size_t pi : probes_of[t.id]) {
      const ProbeSpec& p = plan.probes[pi];
      results[pi] = match(p.id, preds.of(p.id), gt.window(p.window.box()), t.category);
    }
  });

  std::vector<std::pair<CellKey, MatchedResult>> keyed;
  EvalSummary s;
  s.probes = plan.probes.size();
  s.records = preds.record_count();
  s.skipped = plan.skipped.size();
  for (std::size_t i = 0; i < plan.probes.size(); ++i) {
    const ProbeSpec& p = plan.probes[i];
    if (!preds.of(p.id).empty()) ++s.covered;
    keyed.push_back({CellKey{p.size, p.dx, p.dy}, results[i]});
  }
  const auto cells = aggregate_cells(keyed);

  fs::create_directories(cfg.eval_dir());
  std::ofstream(cfg.eval_dir() / "cells.csv", std::ios::binary) << cells_to_csv(cells);
  {
    std::ofstream out(cfg.eval_dir() / "matches.jsonl", std::ios::binary);
    for (const auto& r : results) out << to_json(r).dump() << '\n';
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::json summary{{"probes", s.probes},
                         {"covered_probes", s.covered},
                         {"coverage", s.coverage()},
                         {"prediction_records", s.records},
                         {"skipped_probes", s.skipped},
                         {"cells", cells.size()},
                         {"finished_at", stamp}};
  std::ofstream(cfg.eval_dir() / "summary.json", std::ios::binary) << summary.dump(2) << '\n';
  return s;
}

inline std::vector<CellMetrics> read_cells(const fs::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) fail(ErrorKind::MissingArtifact, "missing " + csv.string() + " (run 'evaluate' first)");
  std::stringstream ss;
  ss << in.rdbuf();
  return cells_from_csv(ss.str());
}

/// One heatmap per (size, metric). Returns the number of maps written.
inline std::size_t run_report(const RunConfig& cfg, const std::vector<Metric>& metrics) {
  const auto cells = read_cells(cfg.eval_dir() / "cells.csv");
  std::map<double, std::vector<CellMetrics>> by_size;
  for (const auto& c : cells) by_size[c.key.size].push_back(c);
  std::size_t n = 0;
  for (const auto& [size, group] : by_size)
    for (Metric m : metrics) {
      write_heatmap(heatmap(group, m), cfg.report_dir(),
                    std::string("heatmap_") + to_string(m) + "_" + format_real(size));
      ++n;
    }
  return n;
}

}  // namespace aniso
