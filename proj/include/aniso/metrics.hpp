#pragma once

// Per-probe matching of predictions against the ground-truth mask and
// per-cell aggregation of prediction rates, confidences and IoUs.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "aniso/detector_protocol.hpp"
#include "aniso/error.hpp"
#include "aniso/image.hpp"
#include "aniso/rle.hpp"

namespace aniso {

namespace detail {

inline void same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    fail(ErrorKind::InvalidInput, "mask resolution mismatch");
}

struct Counts {
  long long inter = 0;
  long long uni = 0;
};

inline Counts overlap_counts(const BinaryMask& a, const BinaryMask& b) {
  same_shape(a, b);
  Counts c;
  const Box box = unite(a.bounds(), b.bounds());
  for (int y = box.y0; y < box.y1; ++y) {
    const std::uint8_t* ra = a.cells().data() + static_cast<std::size_t>(y) * a.width();
    const std::uint8_t* rb = b.cells().data() + static_cast<std::size_t>(y) * b.width();
    for (int x = box.x0; x < box.x1; ++x) {
      c.inter += ra[x] & rb[x];
      c.uni += ra[x] | rb[x];
    }
  }
  return c;
}

}  // namespace detail

/// |a ∩ b| / |a ∪ b|; undefined (error) when both masks are empty.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  const auto c = detail::overlap_counts(a, b);
  if (c.uni == 0) fail(ErrorKind::InvalidInput, "IoU is undefined for two empty masks");
  return static_cast<double>(c.inter) / static_cast<double>(c.uni);
}

inline bool overlaps(const BinaryMask& a, const BinaryMask& b) {
  return detail::overlap_counts(a, b).inter > 0;
}

/// A prediction that shares at least one pixel with the ground truth.
struct ScoredPrediction {
  std::size_t index = 0;  // position in the input list
  std::string label;
  double confidence = 0;
  double iou = 0;
};

/// Keeps predictions sharing at least one mask pixel with `gt`.
inline std::vector<ScoredPrediction> filter_overlapping(std::span<const BinaryMask> masks,
                                                        std::span<const std::string> labels,
                                                        std::span<const double> confidences,
                                                        const BinaryMask& gt) {
  std::vector<ScoredPrediction> kept;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const auto c = detail::overlap_counts(masks[i], gt);
    if (c.inter == 0) continue;
    kept.push_back({i, labels[i], confidences[i],
                    static_cast<double>(c.inter) / static_cast<double>(c.uni)});
  }
  return kept;
}

inline std::vector<ScoredPrediction> filter_overlapping(std::span<const PredictionRecord> preds,
                                                        const BinaryMask& gt) {
  std::vector<BinaryMask> masks;
  std::vector<std::string> labels;
  std::vector<double> confs;
  for (const auto& p : preds) {
    masks.push_back(rle_decode(p.mask));
    labels.push_back(p.label);
    confs.push_back(p.confidence);
  }
  return filter_overlapping(masks, labels, confs, gt);
}

struct Hit {
  double confidence = 0;
  double iou = 0;
  std::string label;
  friend bool operator==(const Hit&, const Hit&) = default;
};

struct MatchedResult {
  std::string probe_id;
  std::optional<Hit> top;
  std::optional<Hit> accurate;
  friend bool operator==(const MatchedResult&, const MatchedResult&) = default;
};

/// Ranking: higher confidence, then higher IoU, then smaller label, then
/// earlier input position.
inline bool ranks_before(const ScoredPrediction& a, const ScoredPrediction& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.iou != b.iou) return a.iou > b.iou;
  if (a.label != b.label) return a.label < b.label;
  return a.index < b.index;
}

inline MatchedResult match(const std::string& probe_id, std::span<const ScoredPrediction> overlapping,
                           const std::string& gt_category) {
  MatchedResult r;
  r.probe_id = probe_id;
  const ScoredPrediction* top = nullptr;
  const ScoredPrediction* acc = nullptr;
  for (const auto& p : overlapping) {
    if (!top || ranks_before(p, *top)) top = &p;
    if (p.label == gt_category && (!acc || ranks_before(p, *acc))) acc = &p;
  }
  if (top) r.top = Hit{top->confidence, top->iou, top->label};
  if (acc) r.accurate = Hit{acc->confidence, acc->iou, acc->label};
  return r;
}

inline MatchedResult match(const std::string& probe_id, std::span<const PredictionRecord> preds,
                           const BinaryMask& gt, const std::string& gt_category) {
  const auto kept = filter_overlapping(preds, gt);
  return match(probe_id, kept, gt_category);
}

// ---------------------------------------------------------------------------
// Aggregation.

struct CellKey {
  double size = 0;
  int dx = 0;
  int dy = 0;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellMetrics {
  CellKey key;
  long long n = 0;
  double r_t = 0;
  double r_a = 0;
  std::optional<double> c_t, c_a, s_t, s_a;
  friend bool operator==(const CellMetrics&, const CellMetrics&) = default;
};

inline CellMetrics aggregate(const CellKey& key, std::span<const MatchedResult> results) {
  if (results.empty()) fail(ErrorKind::InvalidInput, "cannot aggregate an empty cell");
  CellMetrics m;
  m.key = key;
  m.n = static_cast<long long>(results.size());
  long long nt = 0, na = 0;
  double ct = 0, st = 0, ca = 0, sa = 0;
  for (const auto& r : results) {
    if (r.top) {
      ++nt;
      ct += r.top->confidence;
      st += r.top->iou;
    }
    if (r.accurate) {
      ++na;
      ca += r.accurate->confidence;
      sa += r.accurate->iou;
    }
  }
  m.r_t = static_cast<double>(nt) / m.n;
  m.r_a = static_cast<double>(na) / m.n;
  if (nt) {
    m.c_t = ct / nt;
    m.s_t = st / nt;
  }
  if (na) {
    m.c_a = ca / na;
    m.s_a = sa / na;
  }
  return m;
}

/// Groups (cell, result) pairs and aggregates each group; output sorted by key.
inline std::vector<CellMetrics> aggregate_cells(
    std::span<const std::pair<CellKey, MatchedResult>> keyed) {
  std::map<CellKey, std::vector<MatchedResult>> groups;
  for (const auto& [k, r] : keyed) groups[k].push_back(r);
  std::vector<CellMetrics> out;
  for (const auto& [k, rs] : groups) out.push_back(aggregate(k, rs));
  return out;
}

// ---------------------------------------------------------------------------
// CSV: size,dx,dy,n,r_t,r_a,c_t,c_a,s_t,s_a (absent values are empty fields).
// Reals use the shortest representation that parses back to the same double.

inline std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline double parse_real(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(ErrorKind::Validation, "bad number '" + s + "' in CSV");
  return v;
}

inline constexpr const char* kCellCsvHeader = "size,dx,dy,n,r_t,r_a,c_t,c_a,s_t,s_a";

inline std::string cells_to_csv(std::span<const CellMetrics> cells) {
  std::ostringstream os;
  os << kCellCsvHeader << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& c : cells)
    os << format_real(c.key.size) << ',' << c.key.dx << ',' << c.key.dy << ',' << c.n << ','
       << format_real(c.r_t) << ',' << format_real(c.r_a) << ',' << opt(c.c_t) << ',' << opt(c.c_a)
       << ',' << opt(c.s_t) << ',' << opt(c.s_a) << '\n';
  return os.str();
}

inline std::vector<CellMetrics> cells_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCellCsvHeader)
    fail(ErrorKind::Validation, "cell CSV header mismatch");
  std::vector<CellMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.push_back("");
    if (f.size() != 10) fail(ErrorKind::Validation, "cell CSV row has " + std::to_string(f.size()) + " fields");
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return parse_real(s);
    };
    CellMetrics c;
    c.key.size = parse_real(f[0]);
    c.key.dx = static_cast<int>(parse_real(f[1]));
    c.key.dy = static_cast<int>(parse_real(f[2]));
    c.n = static_cast<long long>(parse_real(f[3]));
    c.r_t = parse_real(f[4]);
    c.r_a = parse_real(f[5]);
    c.c_t = opt(f[6]);
    c.c_a = opt(f[7]);
    c.s_t = opt(f[8]);
    c.s_a = opt(f[9]);
    out.push_back(c);
  }
  return out;
}

}  // namespace aniso
