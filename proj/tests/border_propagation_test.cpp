#include "aniso/border_propagation.hpp"

#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace aniso::border {

void PrintTo(const BandReport& r, std::ostream* os) {
  for (const auto& b : r.per_layer)
    *os << "\n  L" << b.layer << " " << b.width << "x" << b.height << " l/r/t/b " << b.left << "/"
        << b.right << "/" << b.top << "/" << b.bottom << " cells " << b.affected_cells;
}

namespace {

using Layers = std::vector<LayerSpec>;

// Independent 1-D oracle: the set of input pixels each output cell reads,
// propagated literally through every layer (padding reads nothing).
std::vector<std::set<int>> dependencies_1d(const Layers& layers, int n) {
  std::vector<std::set<int>> cur(n);
  for (int i = 0; i < n; ++i) cur[i] = {i};
  for (const auto& l : layers) {
    std::vector<std::set<int>> next;
    for (int o = 0;; ++o) {
      const int first = o * l.stride - l.padding;
      if (first + l.kernel - 1 > static_cast<int>(cur.size()) - 1 + l.padding) break;
      std::set<int> dep;
      for (int k = 0; k < l.kernel; ++k) {
        const int j = first + k;
        if (j >= 0 && j < static_cast<int>(cur.size())) dep.insert(cur[j].begin(), cur[j].end());
      }
      next.push_back(dep);
    }
    cur = std::move(next);
  }
  return cur;
}

TEST(ComposeRf, SingleSamePaddedLayer) {
  Layers l{{3, 1, 1}};
  auto s = compose_rf(l);
  EXPECT_EQ(s.rf_size, 3);
  EXPECT_EQ(s.jump, 1);
  EXPECT_EQ(s.start.twice, 0);
}

TEST(ComposeRf, TenStackedLayers) {
  Layers l(10, LayerSpec{3, 1, 1});
  auto s = compose_rf(l);
  EXPECT_EQ(s.rf_size, 21);
  EXPECT_EQ(s.jump, 1);
  EXPECT_EQ(s.start.twice, 0);
}

TEST(ComposeRf, StridedStemMatchesDependencyOracle) {
  Layers l{{7, 2, 3}, {3, 1, 1}};
  auto s = compose_rf(l);
  EXPECT_EQ(s.rf_size, 11);
  EXPECT_EQ(s.jump, 2);
  EXPECT_EQ(s.start.twice, 0);

  // 32-pixel input: an interior output reads exactly rf_size pixels, and
  // consecutive interior outputs shift by jump.
  auto deps = dependencies_1d(l, 32);
  ASSERT_EQ(deps.size(), 16u);
  const auto& mid = deps[8];
  EXPECT_EQ(static_cast<long long>(mid.size()), s.rf_size);
  EXPECT_EQ(*deps[9].begin() - *deps[8].begin(), s.jump);
  // Center of output i is start + i * jump.
  EXPECT_EQ((*mid.begin() + *mid.rbegin()), 2 * (s.start.twice / 2 + 8 * s.jump));
}

TEST(ComposeRf, EvenKernelHasHalfPixelStart) {
  Layers l{{2, 1, 0}};
  auto s = compose_rf(l);
  EXPECT_EQ(s.rf_size, 2);
  EXPECT_EQ(s.start.twice, 1);
  EXPECT_DOUBLE_EQ(s.start.value(), 0.5);
}

TEST(ComposeRf, RejectsEmptyAndInvalidLayers) {
  Layers none;
  EXPECT_THROW(compose_rf(none), Error);
  try {
    compose_rf(none);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
  Layers bad{{0, 1, 0}};
  EXPECT_THROW(compose_rf(bad), Error);
  Layers neg{{3, 1, -1}};
  EXPECT_THROW(compose_rf(neg), Error);
}

TEST(AffectedBand, SingleLayerOn800) {
  Layers l{{3, 1, 1}};
  auto r = affected_band(l, {800, 800});
  ASSERT_EQ(r.per_layer.size(), 1u);
  const auto& b = r.final_layer();
  EXPECT_EQ(b.width, 800);
  EXPECT_EQ(b.left, 1);
  EXPECT_EQ(b.right, 1);
  EXPECT_EQ(b.top, 1);
  EXPECT_EQ(b.bottom, 1);
  EXPECT_NEAR(b.fraction(), 1.0 - (798.0 / 800) * (798.0 / 800), 1e-12);
  EXPECT_NEAR(b.fraction(), 0.004994, 1e-6);
}

TEST(AffectedBand, TenLayersOn800) {
  Layers l(10, LayerSpec{3, 1, 1});
  auto r = affected_band(l, {800, 800});
  for (int i = 0; i < 10; ++i) EXPECT_EQ(r.per_layer[i].left, i + 1);
  const auto& b = r.final_layer();
  EXPECT_EQ(b.left_input, 10);
  EXPECT_NEAR(b.fraction(), 1.0 - (780.0 / 800) * (780.0 / 800), 1e-12);
}

TEST(AffectedBand, StemPlusFourLayersOn64) {
  Layers l{{7, 2, 3}, {3, 1, 1}, {3, 1, 1}, {3, 1, 1}, {3, 1, 1}};
  auto r = affected_band(l, {64, 64});
  // Frozen from the taint simulation (and hand-checked for layer 0: output
  // 31 reads padded indices 59..65, output 30 reads 57..63).
  const int left[] = {2, 3, 4, 5, 6};
  const int right[] = {1, 2, 3, 4, 5};
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(r.per_layer[i].width, 32);
    EXPECT_EQ(r.per_layer[i].left, left[i]) << "layer " << i;
    EXPECT_EQ(r.per_layer[i].right, right[i]) << "layer " << i;
    EXPECT_EQ(r.per_layer[i].top, left[i]);
    EXPECT_EQ(r.per_layer[i].bottom, right[i]);
    EXPECT_EQ(r.per_layer[i].left_input, 2 * left[i]);
  }
  EXPECT_EQ(r, taint_oracle(l, {64, 64}));
}

TEST(AffectedBand, CollapsedDimensionNamesLayer) {
  // Width 16 -> 7 -> 3 -> 1, then the fourth layer has nothing to read.
  Layers l{{3, 2, 0}, {3, 2, 0}, {3, 2, 0}, {3, 2, 0}};
  try {
    affected_band(l, {16, 64});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArchitecture);
    EXPECT_NE(std::string(e.what()).find("layer 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("width"), std::string::npos);
  }
  EXPECT_THROW(taint_oracle(l, {16, 64}), Error);
}

TEST(AffectedBand, EarliestCollapseIsReported) {
  // Height 3 -> 1 -> gone at layer 1; width 5 -> 3 -> 1 -> gone at layer 2.
  Layers l{{3, 1, 0}, {3, 1, 0}, {3, 1, 0}};
  auto message = [&](auto&& f) {
    try {
      f(l, InputSize{5, 3});
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const auto analytic = message([](auto& ls, InputSize in) { affected_band(ls, in); });
  EXPECT_EQ(analytic, "layer 1 collapses the height dimension to < 1");
  EXPECT_EQ(analytic, message([](auto& ls, InputSize in) { taint_oracle(ls, in); }));
}

TEST(TaintOracle, SmallCases) {
  Layers one{{3, 1, 1}};
  auto r = taint_oracle(one, {8, 8});
  EXPECT_EQ(r.final_layer().left, 1);
  EXPECT_EQ(r.final_layer().right, 1);

  Layers point{{1, 1, 0}};
  auto p = taint_oracle(point, {8, 8});
  EXPECT_EQ(p.final_layer().left, 0);
  EXPECT_EQ(p.final_layer().affected_cells, 0);
  EXPECT_EQ(p.final_layer().fraction(), 0.0);
}

TEST(TaintOracle, HandEnumeratedStridedStack) {
  // 16 px, {5,2,2}: window o covers 2o-2..2o+2 -> o=0 and o=7 touch padding.
  // {3,1,1} on 8: o=1 reads tainted 0, o=6 reads tainted 7.
  Layers l{{5, 2, 2}, {3, 1, 1}};
  auto r = taint_oracle(l, {16, 16});
  ASSERT_EQ(r.per_layer.size(), 2u);
  EXPECT_EQ(r.per_layer[0].width, 8);
  EXPECT_EQ(r.per_layer[0].left, 1);
  EXPECT_EQ(r.per_layer[0].right, 1);
  EXPECT_EQ(r.per_layer[1].left, 2);
  EXPECT_EQ(r.per_layer[1].right, 2);
  EXPECT_DOUBLE_EQ(r.per_layer[0].fraction(), 28.0 / 64);
  EXPECT_DOUBLE_EQ(r.per_layer[1].fraction(), 0.75);
  EXPECT_EQ(r, affected_band(l, {16, 16}));
}

TEST(TaintOracle, RejectsHugeInput) {
  Layers l{{3, 1, 1}};
  EXPECT_THROW(taint_oracle(l, {5000, 8}), Error);
}

std::string describe(const Layers& l) {
  std::string out;
  for (const auto& x : l)
    out += "{" + std::to_string(x.kernel) + "," + std::to_string(x.stride) + "," +
           std::to_string(x.padding) + "}";
  return out;
}

Layers random_arch(std::mt19937& rng, int max_layers) {
  std::uniform_int_distribution<int> nl(1, max_layers), k(0, 3), s(1, 2), p(0, 3);
  Layers l(nl(rng));
  for (auto& x : l) x = LayerSpec{1 + 2 * k(rng), s(rng), p(rng)};
  return l;
}

// Properties over random stacks (smaller inputs than the acceptance run).
TEST(BandProperties, RandomStacks) {
  std::mt19937 rng(1234);
  std::uniform_int_distribution<int> dim(4, 48);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Layers l = random_arch(rng, 5);
    InputSize in{dim(rng), dim(rng)};
    BandReport r;
    try {
      r = affected_band(l, in);
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::InvalidArchitecture);
      EXPECT_THROW(taint_oracle(l, in), Error);
      continue;
    }
    ++checked;
    ASSERT_EQ(r, taint_oracle(l, in)) << "input " << in.width << "x" << in.height << " " << describe(l);
    for (const auto& b : r.per_layer) {
      EXPECT_GE(b.fraction(), 0.0);
      EXPECT_LE(b.fraction(), 1.0);
      EXPECT_GE(b.left, 0);
      EXPECT_GE(b.right, 0);
    }
    // A trailing 1x1 layer changes nothing.
    Layers ext = l;
    ext.push_back({1, 1, 0});
    auto re = affected_band(ext, in);
    const auto& a = r.final_layer();
    const auto& e = re.final_layer();
    EXPECT_EQ(a.left_input, e.left_input);
    EXPECT_EQ(a.right_input, e.right_input);
    EXPECT_EQ(a.top_input, e.top_input);
    EXPECT_EQ(a.bottom_input, e.bottom_input);
  }
  EXPECT_GT(checked, 100);
}

// Per-side bands never shrink with depth for stride-1 stacks, as long as
// the map still has an untouched column/row.
TEST(BandProperties, MonotoneForStrideOneStacks) {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> nl(2, 8), k(0, 3), p(0, 3), dim(16, 96);
  for (int trial = 0; trial < 400; ++trial) {
    Layers l(nl(rng));
    for (auto& x : l) x = LayerSpec{1 + 2 * k(rng), 1, p(rng)};
    InputSize in{dim(rng), dim(rng)};
    BandReport r;
    try {
      r = affected_band(l, in);
    } catch (const Error&) {
      continue;
    }
    for (std::size_t i = 1; i < r.per_layer.size(); ++i) {
      const auto& a = r.per_layer[i - 1];
      const auto& b = r.per_layer[i];
      if (b.left + b.right >= b.width || b.top + b.bottom >= b.height) break;
      EXPECT_GE(b.left_input, a.left_input);
      EXPECT_GE(b.right_input, a.right_input);
      EXPECT_GE(b.top_input, a.top_input);
      EXPECT_GE(b.bottom_input, a.bottom_input);
    }
  }
}

// With strides the band can shrink; both simulations agree on it.
TEST(BandProperties, StridedLayersCanSkipTaintedCells) {
  // 1x1/2 on 12 px reads columns 0,2,..,10 and never the tainted column 11.
  Layers skip{{3, 1, 1}, {1, 2, 0}};
  auto r = affected_band(skip, {12, 12});
  EXPECT_EQ(r.per_layer[0].right_input, 1);
  EXPECT_EQ(r.per_layer[1].right_input, 0);
  EXPECT_EQ(r.per_layer[1].left_input, 2);
  EXPECT_EQ(r, taint_oracle(skip, {12, 12}));

  // 3x3/2 without padding on 12 px stops at column 10.
  Layers trunc{{3, 1, 1}, {3, 2, 0}};
  auto t = affected_band(trunc, {12, 12});
  EXPECT_EQ(t.per_layer[1].width, 5);
  EXPECT_EQ(t.per_layer[1].right, 0);
  EXPECT_EQ(t, taint_oracle(trunc, {12, 12}));
}

// Every row of the last layer reads only padding, so all cells are affected
// while the column bands still follow the horizontal receptive fields.
TEST(BandProperties, LayerReadingOnlyPadding) {
  Layers l{{1, 2, 3}};
  auto r = affected_band(l, {2, 1});
  const auto& b = r.final_layer();
  EXPECT_EQ(b.width, 4);
  EXPECT_EQ(b.height, 4);
  // Windows read -3, -1, 1, 3; only index 1 is a real column.
  EXPECT_EQ(b.left, 2);
  EXPECT_EQ(b.right, 1);
  EXPECT_EQ(b.affected_cells, 16);
  EXPECT_EQ(r, taint_oracle(l, {2, 1}));
}

TEST(BandProperties, ReceptiveFieldCriterionWhenPaddingBelowKernel) {
  std::mt19937 rng(4321);
  std::uniform_int_distribution<int> nl(1, 6), k(0, 3), s(1, 2), dim(4, 128);
  for (int trial = 0; trial < 500; ++trial) {
    Layers l(nl(rng));
    for (auto& x : l) {
      x.kernel = 1 + 2 * k(rng);
      x.stride = s(rng);
      x.padding = std::uniform_int_distribution<int>(0, std::min(3, x.kernel - 1))(rng);
    }
    const int n = dim(rng);
    detail::AxisBands a, b;
    try {
      a = detail::axis_bands(l, n, "width");
    } catch (const Error&) {
      continue;
    }
    b = detail::receptive_field_bands(l, n, "width");
    ASSERT_EQ(a.sizes, b.sizes) << describe(l);
    ASSERT_EQ(a.low, b.low) << n << " " << describe(l);
    ASSERT_EQ(a.high, b.high) << n << " " << describe(l);
    ASSERT_EQ(a.jumps, b.jumps);
  }
}

TEST(BandProperties, ReceptiveFieldCriterionOverstatesPurePaddingWindows) {
  // 1 px -> {5,1,2} -> one cell tied to both pads. {1,1,1} then reads
  // indices -1, 0, 1: cell 0 sees only low padding, cell 2 only high padding,
  // yet their virtual fields span the whole input.
  Layers l{{5, 1, 2}, {1, 1, 1}};
  auto exact = detail::axis_bands(l, 1, "width");
  auto rf = detail::receptive_field_bands(l, 1, "width");
  EXPECT_EQ(exact.sizes[1], 3);
  EXPECT_EQ(exact.low[1], 2);
  EXPECT_EQ(exact.high[1], 2);
  EXPECT_EQ(rf.low[1], 3);
  EXPECT_EQ(rf.high[1], 3);
  EXPECT_EQ(affected_band(l, {1, 1}), taint_oracle(l, {1, 1}));
}

TEST(BandProperties, StrideOneSamePaddingSumsHalfWidths) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> nl(1, 8), k(1, 9);
  for (int trial = 0; trial < 100; ++trial) {
    Layers l(nl(rng));
    long long sum = 0;
    for (auto& x : l) {
      x.kernel = k(rng);
      x.stride = 1;
      x.padding = (x.kernel - 1) / 2;
      sum += (x.kernel - 1) / 2;
    }
    auto r = affected_band(l, {200, 200});
    EXPECT_EQ(r.final_layer().left_input, sum);
    EXPECT_EQ(r.final_layer().top_input, sum);
  }
}

TEST(BandProperties, CellForCellAgainstTaintGrid) {
  Layers l{{7, 2, 3}, {3, 2, 1}, {5, 1, 2}, {2, 1, 0}};
  InputSize in{37, 29};
  auto r = affected_band(l, in);
  auto grids = taint_simulate(l, in);
  for (std::size_t i = 0; i < grids.size(); ++i)
    for (int y = 0; y < grids[i].height; ++y)
      for (int x = 0; x < grids[i].width; ++x)
        ASSERT_EQ(grids[i].at(x, y) != 0, r.per_layer[i].affected(x, y))
            << "layer " << i << " cell " << x << "," << y;
}

TEST(ArchitectureFile, ParsesPositionalAndKeyed) {
  auto l = parse_architecture(
      "# stem\n"
      "conv 7 2 3\n"
      "pool kernel=3 stride=2 padding=1\n"
      "\n"
      "3,1,1  # trailing comment\n"
      "k=1 s=1 p=0\n");
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], (LayerSpec{7, 2, 3}));
  EXPECT_EQ(l[1], (LayerSpec{3, 2, 1}));
  EXPECT_EQ(l[2], (LayerSpec{3, 1, 1}));
  EXPECT_EQ(l[3], (LayerSpec{1, 1, 0}));
}

TEST(ArchitectureFile, RejectsBadLines) {
  EXPECT_THROW(parse_architecture("3 1\n"), Error);
  EXPECT_THROW(parse_architecture("3 x 1\n"), Error);
  EXPECT_THROW(parse_architecture("kernel=3 bogus=1\n"), Error);
  EXPECT_THROW(parse_architecture("# nothing\n"), Error);
}

TEST(ArchitectureFile, TableAndCsv) {
  Layers l{{3, 1, 1}};
  auto r = affected_band(l, {8, 8});
  auto table = format_table(l, r);
  EXPECT_NE(table.find("8x8"), std::string::npos);
  EXPECT_NE(table.find("1/1/1/1"), std::string::npos);
  auto csv = format_csv(l, r);
  EXPECT_NE(csv.find("0,3,1,1,8,8,1,1,1,1,1,1,1,1,28,0.4375"), std::string::npos);
}

}  // namespace
}  // namespace aniso::border
