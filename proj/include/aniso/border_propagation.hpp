#pragma once

// Padding contamination through a stack of local window layers (convolution
// or pooling). An output cell is "affected" when its receptive field reaches
// past the input border, i.e. when any value it depends on came from padding.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "aniso/error.hpp"
#include "aniso/geometry.hpp"

namespace aniso::border {

/// Square, symmetric window layer. Padding is per side.
struct LayerSpec {
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct InputSize {
  int width = 0;
  int height = 0;
};

/// A value in half-pixel units; exact for every center produced by the
/// receptive-field recurrence, including even kernels.
struct HalfPixels {
  long long twice = 0;
  double value() const { return static_cast<double>(twice) / 2.0; }
  friend bool operator==(const HalfPixels&, const HalfPixels&) = default;
};

struct ReceptiveFieldState {
  long long rf_size = 1;
  long long jump = 1;
  HalfPixels start{};  // input-coordinate center of output index 0
  friend bool operator==(const ReceptiveFieldState&, const ReceptiveFieldState&) = default;
};

struct LayerBand {
  int layer = 0;
  int width = 0;   // output spatial size
  int height = 0;
  int left = 0;    // affected band per side, output pixels
  int right = 0;
  int top = 0;
  int bottom = 0;
  long long left_input = 0;  // band mapped to input pixels (band * jump)
  long long right_input = 0;
  long long top_input = 0;
  long long bottom_input = 0;
  long long affected_cells = 0;

  double fraction() const {
    return static_cast<double>(affected_cells) /
           (static_cast<double>(width) * static_cast<double>(height));
  }

  bool affected(int x, int y) const {
    return x < left || x >= width - right || y < top || y >= height - bottom;
  }

  friend bool operator==(const LayerBand&, const LayerBand&) = default;
};

struct BandReport {
  std::vector<LayerBand> per_layer;

  const LayerBand& final_layer() const { return per_layer.back(); }
  friend bool operator==(const BandReport&, const BandReport&) = default;
};

inline void validate(std::span<const LayerSpec> layers) {
  if (layers.empty()) fail(ErrorKind::InvalidInput, "architecture has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.kernel < 1 || l.stride < 1 || l.padding < 0)
      fail(ErrorKind::InvalidInput,
           "layer " + std::to_string(i) + ": need kernel >= 1, stride >= 1, padding >= 0");
  }
}

inline ReceptiveFieldState step(const ReceptiveFieldState& s, const LayerSpec& l) {
  ReceptiveFieldState n;
  n.rf_size = s.rf_size + static_cast<long long>(l.kernel - 1) * s.jump;
  n.jump = s.jump * l.stride;
  // start' = start + ((k-1)/2 - p) * jump, in half pixels.
  n.start.twice = s.start.twice + (static_cast<long long>(l.kernel - 1) - 2LL * l.padding) * s.jump;
  return n;
}

inline ReceptiveFieldState compose_rf(std::span<const LayerSpec> layers) {
  validate(layers);
  ReceptiveFieldState s;
  for (const auto& l : layers) s = step(s, l);
  return s;
}

/// floor((n + 2p - k) / s) + 1, or a value < 1 when the layer collapses.
inline long long output_size(long long n, const LayerSpec& l) {
  long long span = n + 2LL * l.padding - l.kernel;
  if (span < 0) return 0;
  return span / l.stride + 1;
}

namespace detail {

[[noreturn]] inline void collapsed(std::size_t li, const char* axis) {
  fail(ErrorKind::InvalidArchitecture,
       "layer " + std::to_string(li) + " collapses the " + axis + " dimension to < 1");
}

struct AxisBands {
  std::vector<int> sizes;
  std::vector<int> low;
  std::vector<int> high;
  std::vector<long long> jumps;
};

// Band recurrence along one axis. Output o reads padded indices
// [o*s - p, o*s - p + k - 1]; it depends on the low border iff that window
// starts before the previous low band ends, and on the high border iff it
// ends inside (or past) the previous high band.
inline AxisBands axis_bands(std::span<const LayerSpec> layers, int input, const char* axis) {
  AxisBands out;
  long long n = input, low = 0, high = 0, jump = 1;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    const long long on = output_size(n, l);
    if (on < 1) collapsed(li, axis);
    const long long next_low = std::min(on, ceil_div(low + l.padding, l.stride));
    const long long first_high =
        std::clamp(ceil_div(n - high - l.kernel + 1 + l.padding, l.stride), 0LL, on);
    n = on;
    low = next_low;
    high = on - first_high;
    jump *= l.stride;
    out.sizes.push_back(static_cast<int>(n));
    out.low.push_back(static_cast<int>(low));
    out.high.push_back(static_cast<int>(high));
    out.jumps.push_back(jump);
  }
  return out;
}

// The same bands from receptive-field geometry: a cell is affected iff its
// field, taken as an interval around its center, crosses the input border.
// This agrees with axis_bands while every layer has padding < kernel; with
// more padding a window can hold nothing but padding and the interval
// overstates what the cell reads.
inline AxisBands receptive_field_bands(std::span<const LayerSpec> layers, int input,
                                       const char* axis) {
  AxisBands out;
  ReceptiveFieldState s;
  long long n = input;
  const long long last2 = 2LL * (input - 1);
  for (std::size_t li = 0; li < layers.size(); ++li) {
    n = output_size(n, layers[li]);
    if (n < 1)
      fail(ErrorKind::InvalidArchitecture, "layer " + std::to_string(li) + " collapses the " +
                                               axis + " dimension to < 1");
    s = step(s, layers[li]);
    const long long reach = s.rf_size - 1;  // twice the half-width
    int low = 0, high = 0;
    for (long long i = 0; i < n; ++i) {
      const long long center2 = s.start.twice + 2 * i * s.jump;
      if (center2 - reach < 0) ++low;
      if (center2 + reach > last2) ++high;
    }
    out.sizes.push_back(static_cast<int>(n));
    out.low.push_back(low);
    out.high.push_back(high);
    out.jumps.push_back(s.jump);
  }
  return out;
}

inline long long untouched(int size, int low, int high) {
  return std::max(0, size - low - high);
}

}  // namespace detail

/// Analytic band report, one closed-form recurrence step per layer and axis.
inline BandReport affected_band(std::span<const LayerSpec> layers, InputSize input) {
  validate(layers);
  if (input.width < 1 || input.height < 1) fail(ErrorKind::InvalidInput, "input size must be >= 1");
  // Report the earliest collapsing layer, width before height.
  long long w = input.width, h = input.height;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    w = output_size(w, layers[li]);
    h = output_size(h, layers[li]);
    if (w < 1) detail::collapsed(li, "width");
    if (h < 1) detail::collapsed(li, "height");
  }
  auto xs = detail::axis_bands(layers, input.width, "width");
  auto ys = detail::axis_bands(layers, input.height, "height");
  BandReport r;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerBand b;
    b.layer = static_cast<int>(i);
    b.width = xs.sizes[i];
    b.height = ys.sizes[i];
    b.left = xs.low[i];
    b.right = xs.high[i];
    b.top = ys.low[i];
    b.bottom = ys.high[i];
    b.left_input = b.left * xs.jumps[i];
    b.right_input = b.right * xs.jumps[i];
    b.top_input = b.top * ys.jumps[i];
    b.bottom_input = b.bottom * ys.jumps[i];
    b.affected_cells = static_cast<long long>(b.width) * b.height -
                       detail::untouched(b.width, b.left, b.right) *
                           detail::untouched(b.height, b.top, b.bottom);
    r.per_layer.push_back(b);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Brute-force taint simulation.

/// Boolean taint map of one layer output (1 = influenced by padding).
struct TaintGrid {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;
  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr int kMaxOracleDim = 4096;

namespace detail {

// Windows o = 0, 1, ... cover padded indices [o*s - p, o*s - p + k - 1] and
// must stay within [-p, n - 1 + p]. Counted directly, not via output_size.
inline int window_count(int n, const LayerSpec& l) {
  int c = 0;
  while (static_cast<long long>(c) * l.stride - l.padding + l.kernel - 1 <= n - 1 + l.padding) ++c;
  return c;
}

inline void check_oracle_input(std::span<const LayerSpec> layers, InputSize input) {
  validate(layers);
  if (input.width < 1 || input.height < 1) fail(ErrorKind::InvalidInput, "input size must be >= 1");
  if (input.width > kMaxOracleDim || input.height > kMaxOracleDim)
    fail(ErrorKind::InvalidInput, "input too large for dense taint simulation");
}

enum SideBits : std::uint8_t { kLow = 1, kHigh = 2 };

struct SideCounts {
  int size = 0;
  int low = 0;
  int high = 0;
};

// One axis on its own, with the two pads labelled separately, so each cell
// records which border it depends on.
inline std::vector<SideCounts> taint_sides_1d(std::span<const LayerSpec> layers, int input,
                                              const char* axis) {
  std::vector<std::uint8_t> cur(input, 0);
  std::vector<SideCounts> out;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    const int n = static_cast<int>(cur.size());
    const int on = window_count(n, l);
    if (on < 1) collapsed(li, axis);
    std::vector<std::uint8_t> next(on, 0);
    SideCounts c{on, 0, 0};
    for (int o = 0; o < on; ++o) {
      for (int k = 0; k < l.kernel; ++k) {
        const int i = o * l.stride - l.padding + k;
        next[o] |= i < 0 ? std::uint8_t{kLow} : i >= n ? std::uint8_t{kHigh} : cur[i];
      }
      c.low += (next[o] & kLow) != 0;
      c.high += (next[o] & kHigh) != 0;
    }
    out.push_back(c);
    cur = std::move(next);
  }
  return out;
}

}  // namespace detail

/// Dense simulation: every layer input is padded with tainted cells and an
/// output cell is tainted iff any cell of its window is.
inline std::vector<TaintGrid> taint_simulate(std::span<const LayerSpec> layers, InputSize input) {
  detail::check_oracle_input(layers, input);
  TaintGrid cur{input.width, input.height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(input.width) * input.height, 0)};
  std::vector<TaintGrid> grids;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    const int ow = detail::window_count(cur.width, l);
    const int oh = detail::window_count(cur.height, l);
    if (ow < 1) detail::collapsed(li, "width");
    if (oh < 1) detail::collapsed(li, "height");
    TaintGrid next{ow, oh, std::vector<std::uint8_t>(static_cast<std::size_t>(ow) * oh, 0)};
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        std::uint8_t acc = 0;
        const int y0 = oy * l.stride - l.padding;
        const int x0 = ox * l.stride - l.padding;
        for (int ky = 0; ky < l.kernel && !acc; ++ky) {
          const int y = y0 + ky;
          for (int kx = 0; kx < l.kernel && !acc; ++kx) {
            const int x = x0 + kx;
            acc = (x < 0 || y < 0 || x >= cur.width || y >= cur.height) ? 1 : cur.at(x, y);
          }
        }
        next.bits[static_cast<std::size_t>(oy) * ow + ox] = acc;
      }
    }
    grids.push_back(next);
    cur = std::move(next);
  }
  return grids;
}

/// Band report read off brute-force simulation. affected_cells counts the
/// tainted cells of the 2-D grid. Per-side widths come from a 1-D run along
/// each axis with the two pads told apart; the 2-D grid cannot separate them
/// once a row reads nothing but padding.
inline BandReport taint_oracle(std::span<const LayerSpec> layers, InputSize input) {
  auto grids = taint_simulate(layers, input);
  auto xs = detail::taint_sides_1d(layers, input.width, "width");
  auto ys = detail::taint_sides_1d(layers, input.height, "height");
  BandReport r;
  long long jump = 1;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const auto& g = grids[i];
    jump *= layers[i].stride;
    LayerBand b;
    b.layer = static_cast<int>(i);
    b.width = g.width;
    b.height = g.height;
    b.left = xs[i].low;
    b.right = xs[i].high;
    b.top = ys[i].low;
    b.bottom = ys[i].high;
    for (auto t : g.bits) b.affected_cells += t;
    b.left_input = b.left * jump;
    b.right_input = b.right * jump;
    b.top_input = b.top * jump;
    b.bottom_input = b.bottom * jump;
    r.per_layer.push_back(b);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Architecture files and table output.

/// One layer per line: either three integers "kernel stride padding" or
/// key=value tokens (kernel=, stride=, padding=; k=, s=, p= also accepted).
/// A leading non-numeric word (e.g. "conv" or "pool") is ignored as a label.
/// Blank lines and text after '#' are skipped.
inline std::vector<LayerSpec> parse_architecture(const std::string& text) {
  std::vector<LayerSpec> layers;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto to_int = [&](const std::string& tok) {
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      fail(ErrorKind::InvalidInput,
           "architecture line " + std::to_string(lineno) + ": bad integer '" + tok + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    if (!std::isdigit(static_cast<unsigned char>(toks[0][0])) &&
        toks[0].find('=') == std::string::npos)
      toks.erase(toks.begin());
    if (toks.empty())
      fail(ErrorKind::InvalidInput, "architecture line " + std::to_string(lineno) + ": no fields");

    LayerSpec l;
    bool keyed = toks[0].find('=') != std::string::npos;
    if (keyed) {
      bool have_k = false;
      for (const auto& t : toks) {
        auto eq = t.find('=');
        if (eq == std::string::npos)
          fail(ErrorKind::InvalidInput, "architecture line " + std::to_string(lineno) +
                                            ": mixed positional and key=value fields");
        std::string key = t.substr(0, eq);
        int v = to_int(t.substr(eq + 1));
        if (key == "kernel" || key == "k") l.kernel = v, have_k = true;
        else if (key == "stride" || key == "s") l.stride = v;
        else if (key == "padding" || key == "p") l.padding = v;
        else
          fail(ErrorKind::InvalidInput,
               "architecture line " + std::to_string(lineno) + ": unknown field '" + key + "'");
      }
      if (!have_k)
        fail(ErrorKind::InvalidInput, "architecture line " + std::to_string(lineno) + ": missing kernel");
    } else {
      if (toks.size() != 3)
        fail(ErrorKind::InvalidInput, "architecture line " + std::to_string(lineno) +
                                          ": expected 'kernel stride padding'");
      l.kernel = to_int(toks[0]);
      l.stride = to_int(toks[1]);
      l.padding = to_int(toks[2]);
    }
    layers.push_back(l);
  }
  validate(layers);
  return layers;
}

inline std::string format_table(std::span<const LayerSpec> layers, const BandReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "layer" << std::right << std::setw(4) << "k" << std::setw(4)
     << "s" << std::setw(4) << "p" << std::setw(12) << "output" << std::setw(16) << "band L/R/T/B"
     << std::setw(20) << "input band L/R/T/B" << std::setw(12) << "fraction" << '\n';
  for (const auto& b : r.per_layer) {
    const auto& l = layers[b.layer];
    std::ostringstream out, band, inband;
    out << b.width << "x" << b.height;
    band << b.left << "/" << b.right << "/" << b.top << "/" << b.bottom;
    inband << b.left_input << "/" << b.right_input << "/" << b.top_input << "/" << b.bottom_input;
    os << std::left << std::setw(6) << b.layer << std::right << std::setw(4) << l.kernel
       << std::setw(4) << l.stride << std::setw(4) << l.padding << std::setw(12) << out.str()
       << std::setw(16) << band.str() << std::setw(20) << inband.str() << std::setw(12)
       << std::fixed << std::setprecision(6) << b.fraction() << '\n';
  }
  return os.str();
}

inline std::string format_csv(std::span<const LayerSpec> layers, const BandReport& r) {
  std::ostringstream os;
  os << "layer,kernel,stride,padding,out_width,out_height,band_left,band_right,band_top,"
        "band_bottom,input_band_left,input_band_right,input_band_top,input_band_bottom,"
        "affected_cells,fraction\n";
  for (const auto& b : r.per_layer) {
    const auto& l = layers[b.layer];
    os << b.layer << ',' << l.kernel << ',' << l.stride << ',' << l.padding << ',' << b.width
       << ',' << b.height << ',' << b.left << ',' << b.right << ',' << b.top << ',' << b.bottom
       << ',' << b.left_input << ',' << b.right_input << ',' << b.top_input << ','
       << b.bottom_input << ',' << b.affected_cells << ',' << std::setprecision(17)
       << b.fraction() << '\n';
  }
  return os.str();
}

}  // namespace aniso::border
