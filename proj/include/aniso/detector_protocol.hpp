#pragma once

// Directory-based exchange with an external detector.
//
//   <dir>/manifest.json       probes to run (written by the harness)
//   <dir>/probes/<id>.png     800x800 RGB crops (written by the harness)
//   <dir>/preds/<shard>.jsonl one prediction record per line (detector)
//
// A probe without any prediction record is a miss.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/error.hpp"
#include "aniso/rle.hpp"

namespace aniso {

struct ManifestEntry {
  std::string probe_id;
  std::string path;  // relative to the exchange directory
  int width = 0;
  int height = 0;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct ProbeManifest {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ManifestEntry> probes;

  const ManifestEntry* find(const std::string& id) const {
    auto it = std::lower_bound(probes.begin(), probes.end(), id,
                               [](const ManifestEntry& e, const std::string& k) { return e.probe_id < k; });
    return (it != probes.end() && it->probe_id == id) ? &*it : nullptr;
  }
  friend bool operator==(const ProbeManifest&, const ProbeManifest&) = default;
};

struct PredictionRecord {
  std::string probe_id;
  std::string label;
  double confidence = 0;
  Rle mask;
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

inline std::string crop_relpath(const std::string& probe_id) { return "probes/" + probe_id + ".png"; }

inline void check_manifest(const ProbeManifest& m) {
  std::set<std::string> seen;
  for (const auto& e : m.probes) {
    if (e.probe_id.empty()) fail(ErrorKind::Validation, "manifest entry with empty probe id");
    if (!seen.insert(e.probe_id).second)
      fail(ErrorKind::Validation, "duplicate probe id '" + e.probe_id + "' in manifest");
    if (e.width < 1 || e.height < 1)
      fail(ErrorKind::Validation, "probe '" + e.probe_id + "': bad crop dimensions");
  }
}

/// Writes <dir>/manifest.json. Entries are stored sorted by probe id.
inline ProbeManifest write_manifest(ProbeManifest m, const std::filesystem::path& dir) {
  std::sort(m.probes.begin(), m.probes.end(),
            [](const auto& a, const auto& b) { return a.probe_id < b.probe_id; });
  check_manifest(m);
  std::filesystem::create_directories(dir);
  nlohmann::json j{{"metadata", m.metadata}, {"probes", nlohmann::json::array()}};
  for (const auto& e : m.probes)
    j["probes"].push_back(
        {{"probe_id", e.probe_id}, {"path", e.path}, {"width", e.width}, {"height", e.height}});
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + (dir / "manifest.json").string());
  out << j.dump(1) << '\n';
  return m;
}

inline ProbeManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in)
    fail(ErrorKind::MissingArtifact,
         "missing probe manifest " + (dir / "manifest.json").string() + " (run 'generate' first)");
  ProbeManifest m;
  try {
    nlohmann::json j;
    in >> j;
    m.metadata = j.value("metadata", nlohmann::json::object());
    for (const auto& e : j.at("probes"))
      m.probes.push_back({e.at("probe_id").get<std::string>(), e.at("path").get<std::string>(),
                          e.at("width").get<int>(), e.at("height").get<int>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, "malformed probe manifest: " + std::string(e.what()));
  }
  std::sort(m.probes.begin(), m.probes.end(),
            [](const auto& a, const auto& b) { return a.probe_id < b.probe_id; });
  check_manifest(m);
  return m;
}

inline nlohmann::json to_json(const PredictionRecord& r) {
  return {{"probe_id", r.probe_id},
          {"label", r.label},
          {"confidence", r.confidence},
          {"mask", to_json(r.mask)}};
}

/// Appends records to <dir>/preds/<shard>.jsonl.
inline void write_predictions(const std::vector<PredictionRecord>& records,
                              const std::filesystem::path& dir, const std::string& shard) {
  std::filesystem::create_directories(dir / "preds");
  const auto path = dir / "preds" / (shard + ".jsonl");
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

/// Predictions grouped by probe id. Within a probe, records keep shard
/// order (shards sorted by file name) and line order.
struct PredictionSet {
  std::map<std::string, std::vector<PredictionRecord>> by_probe;

  std::size_t record_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : by_probe) n += v.size();
    return n;
  }
  const std::vector<PredictionRecord>& of(const std::string& probe_id) const {
    static const std::vector<PredictionRecord> none;
    auto it = by_probe.find(probe_id);
    return it == by_probe.end() ? none : it->second;
  }
};

/// Checks one record against the manifest; returns a reason or "".
inline std::string check_record(const PredictionRecord& r, const ProbeManifest& m) {
  const ManifestEntry* e = m.find(r.probe_id);
  if (!e) return "unknown probe id";
  if (r.label.empty()) return "empty label";
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) return "confidence outside [0,1]";
  if (r.mask.width != e->width || r.mask.height != e->height)
    return "mask size does not match the crop";
  unsigned long long total = 0;
  for (auto c : r.mask.counts) total += c;
  if (total != static_cast<unsigned long long>(e->width) * e->height) return "RLE length mismatch";
  return {};
}

/// Reads every preds/*.jsonl shard, collecting all validation problems.
inline PredictionSet read_predictions(const std::filesystem::path& dir, const ProbeManifest& m,
                                      std::vector<std::string>* problems) {
  PredictionSet set;
  const auto preds = dir / "preds";
  if (!std::filesystem::exists(preds)) return set;
  std::vector<std::filesystem::path> shards;
  for (const auto& ent : std::filesystem::directory_iterator(preds))
    if (ent.is_regular_file() && ent.path().extension() == ".jsonl") shards.push_back(ent.path());
  std::sort(shards.begin(), shards.end());
  for (const auto& path : shards) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string where = path.filename().string() + ":" + std::to_string(lineno);
      PredictionRecord r;
      try {
        auto j = nlohmann::json::parse(line);
        r.probe_id = j.at("probe_id").get<std::string>();
        r.label = j.at("label").get<std::string>();
        r.confidence = j.at("confidence").get<double>();
        r.mask = rle_from_json(j.at("mask"));
      } catch (const nlohmann::json::exception& e) {
        problems->push_back(where + ": malformed record: " + e.what());
        continue;
      }
      if (auto why = check_record(r, m); !why.empty()) {
        problems->push_back(where + ": probe '" + r.probe_id + "': " + why);
        continue;
      }
      set.by_probe[r.probe_id].push_back(std::move(r));
    }
  }
  return set;
}

/// Throwing form: any malformed record is a validation error.
inline PredictionSet read_predictions(const std::filesystem::path& dir, const ProbeManifest& m) {
  std::vector<std::string> problems;
  PredictionSet set = read_predictions(dir, m, &problems);
  if (!problems.empty()) {
    std::ostringstream os;
    os << problems.size() << " invalid prediction record(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(problems.size(), 20); ++i)
      os << "\n  " << problems[i];
    fail(ErrorKind::Validation, os.str());
  }
  return set;
}

}  // namespace aniso
