#pragma once

// Uncompressed row-major run-length encoding of binary masks. Counts
// alternate zero-runs and one-runs, starting with zeros, and sum to the area.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/error.hpp"
#include "aniso/image.hpp"

namespace aniso {

struct Rle {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;
  friend bool operator==(const Rle&, const Rle&) = default;
};

inline Rle rle_encode(const BinaryMask& m) {
  Rle r{m.width(), m.height(), {}};
  const std::uint8_t* data = m.cells().data();
  const std::size_t n = m.cells().size();
  std::size_t pos = 0;
  std::uint8_t current = 0;
  while (pos < n) {
    std::size_t end;
    if (current == 0) {
      const void* hit = std::memchr(data + pos, 1, n - pos);
      end = hit ? static_cast<std::size_t>(static_cast<const std::uint8_t*>(hit) - data) : n;
    } else {
      end = pos;
      while (end < n && data[end]) ++end;
    }
    r.counts.push_back(static_cast<std::uint32_t>(end - pos));
    pos = end;
    current ^= 1;
  }
  if (r.counts.empty()) r.counts.push_back(0);
  return r;
}

inline BinaryMask rle_decode(const Rle& r) {
  if (r.width < 0 || r.height < 0) fail(ErrorKind::Validation, "RLE has negative dimensions");
  const std::uint64_t area = static_cast<std::uint64_t>(r.width) * r.height;
  std::uint64_t total = 0;
  for (auto c : r.counts) total += c;
  if (total != area)
    fail(ErrorKind::Validation, "RLE length mismatch: counts sum to " + std::to_string(total) +
                                    ", mask has " + std::to_string(area) + " cells");
  BinaryMask m(r.width, r.height);
  std::size_t pos = 0;
  std::uint8_t v = 0;
  for (auto c : r.counts) {
    if (v) std::fill_n(m.cells().begin() + static_cast<std::ptrdiff_t>(pos), c, std::uint8_t{1});
    pos += c;
    v ^= 1;
  }
  return m;
}

inline nlohmann::json to_json(const Rle& r) {
  return {{"width", r.width}, {"height", r.height}, {"counts", r.counts}};
}

inline Rle rle_from_json(const nlohmann::json& j) {
  Rle r;
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  r.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  return r;
}

}  // namespace aniso
