#include <gtest/gtest.h>

#include "theta/core/error.hpp"
#include "theta/core/rng.hpp"
#include "theta/segment/segment.hpp"

using namespace theta;
using namespace theta::segment;

namespace {

RgbImage uniform(int w, int h, Rgb c) { return RgbImage(w, h, c); }

// Straight 3x3 window; erosion needs all nine in frame and true, dilation any
// in-frame neighbour.
BinaryMask window_op(const BinaryMask& m, bool erode_op) {
  BinaryMask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      bool all = true, any = false;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          const bool inside = xx >= 0 && yy >= 0 && xx < m.width && yy < m.height;
          const bool v = inside && m.at(xx, yy);
          all = all && v;
          any = any || v;
        }
      }
      out.bits[static_cast<std::size_t>(y) * m.width + x] = (erode_op ? all : any) ? 1 : 0;
    }
  }
  return out;
}

BinaryMask reference_refine(const BinaryMask& m) {
  const BinaryMask opened = window_op(window_op(m, true), false);
  return window_op(window_op(opened, false), true);
}

BinaryMask random_mask(Rng& rng, int w, int h, double p) {
  BinaryMask m(w, h);
  for (auto& b : m.bits) b = rng.uniform() < p ? 1 : 0;
  return m;
}

}  // namespace

TEST(Hsv, Examples) {
  const Hsv red = rgb_to_hsv({255, 0, 0});
  EXPECT_DOUBLE_EQ(red.h, 0.0);
  EXPECT_DOUBLE_EQ(red.s, 1.0);
  EXPECT_DOUBLE_EQ(red.v, 1.0);
  const Hsv green = rgb_to_hsv({0, 255, 0});
  EXPECT_DOUBLE_EQ(green.h, 120.0);
  const Hsv gray = rgb_to_hsv({128, 128, 128});
  EXPECT_DOUBLE_EQ(gray.h, 0.0);
  EXPECT_DOUBLE_EQ(gray.s, 0.0);
  EXPECT_NEAR(gray.v, 128.0 / 255.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv({255, 0, 40}).h, 360.0 - 40.0 / 255.0 * 60.0, 1e-9);
}

TEST(Hsv, HueAlwaysInRange) {
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const Rgb c{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                static_cast<std::uint8_t>(rng.below(256))};
    const Hsv h = rgb_to_hsv(c);
    EXPECT_GE(h.h, 0.0);
    EXPECT_LT(h.h, 360.0);
  }
}

TEST(Thresholds, ValidateRejectsBadBands) {
  HsvThresholds t;
  t.sat_min = 1.5;
  EXPECT_THROW(t.validate(), ArgumentError);
  HsvThresholds u;
  u.hue_bands = {{30.0, 10.0}};
  EXPECT_THROW(u.validate(), ArgumentError);
}

TEST(HsvMask, UniformFrames) {
  const HsvThresholds t;
  for (float v : hsv_mask(uniform(8, 6, {255, 0, 0}), t).values) EXPECT_EQ(v, 1.0f);
  for (float v : hsv_mask(uniform(8, 6, {0, 0, 255}), t).values) EXPECT_EQ(v, 0.0f);
}

TEST(HsvMask, HalfRedHalfGray) {
  RgbImage f(10, 4, {128, 128, 128});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) f.set(x, y, {255, 0, 0});
  const SoftMask m = hsv_mask(f, HsvThresholds{});
  double sum = 0;
  for (float v : m.values) sum += v;
  EXPECT_DOUBLE_EQ(sum / m.values.size(), 0.5);
}

TEST(HsvMask, ThresholdCommutes) {
  Rng rng(11);
  RgbImage f(32, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x)
      f.set(x, y, {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                   static_cast<std::uint8_t>(rng.below(256))});
  const HsvThresholds t;
  const SoftMask soft = hsv_mask(f, t);
  const BinaryMask hard = threshold(soft);
  for (std::size_t i = 0; i < soft.values.size(); ++i) {
    EXPECT_TRUE(soft.values[i] == 0.0f || soft.values[i] == 1.0f);
    EXPECT_EQ(hard.bits[i], soft.values[i] == 1.0f ? 1 : 0);
    const int x = static_cast<int>(i % 32), y = static_cast<int>(i / 32);
    EXPECT_EQ(hard.bits[i] != 0, t.accepts(rgb_to_hsv(f.at(x, y))));
  }
}

TEST(Threshold, BoundaryAndCheckerboard) {
  SoftMask m{6, 4, std::vector<float>(24, 0.5f)};
  EXPECT_EQ(threshold(m).count(), 24u);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) m.values[y * 6 + x] = (x + y) % 2 ? 0.6f : 0.4f;
  const BinaryMask b = threshold(m);
  EXPECT_EQ(b.count(), 12u);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) EXPECT_EQ(b.at(x, y), (x + y) % 2 == 1);
}

TEST(Morphology, MatchesSlidingWindowReference) {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(40));
    const int h = 1 + static_cast<int>(rng.below(40));
    const BinaryMask m = random_mask(rng, w, h, rng.uniform(0.1, 0.9));
    EXPECT_EQ(erode(m), window_op(m, true));
    EXPECT_EQ(dilate(m), window_op(m, false));
    EXPECT_EQ(morph_refine(m), reference_refine(m));
  }
}

TEST(Morphology, FullFrame) {
  const BinaryMask full(12, 9, true);
  const BinaryMask out = morph_refine(full);
  EXPECT_EQ(out, reference_refine(full));
  for (int y = 1; y < 8; ++y)
    for (int x = 1; x < 11; ++x) EXPECT_TRUE(out.at(x, y));
}

TEST(Morphology, SpeckAndHole) {
  BinaryMask speck(15, 15);
  speck.bits[7 * 15 + 7] = 1;
  EXPECT_EQ(morph_refine(speck).count(), 0u);

  BinaryMask hole(15, 15, true);
  hole.bits[7 * 15 + 7] = 0;
  EXPECT_TRUE(morph_refine(hole).at(7, 7));
}

TEST(Morphology, IdempotentOnRefined) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    // Blocky masks: 4x4 cells, so no single-pixel features after refining.
    BinaryMask m(48, 32);
    for (int cy = 0; cy < 8; ++cy)
      for (int cx = 0; cx < 12; ++cx) {
        const bool on = rng.uniform() < 0.5;
        for (int y = 0; y < 4; ++y)
          for (int x = 0; x < 4; ++x) m.bits[(cy * 4 + y) * 48 + cx * 4 + x] = on;
      }
    const BinaryMask once = morph_refine(m);
    EXPECT_EQ(morph_refine(once), once);
  }
}

TEST(Prepare, AllFalseMaskIsMinusOne) {
  const RgbImage f = uniform(64, 48, {200, 30, 30});
  const PlanarImage p = apply_and_prepare(f, BinaryMask(64, 48, false));
  EXPECT_EQ(p.channels, 3);
  EXPECT_EQ(p.height, 224);
  EXPECT_EQ(p.width, 224);
  for (float v : p.values) EXPECT_EQ(v, -1.0f);
}

TEST(Prepare, PureRed) {
  const PlanarImage p = apply_and_prepare(uniform(640, 480, {255, 0, 0}), BinaryMask(640, 480, true));
  for (int y = 0; y < 224; y += 17)
    for (int x = 0; x < 224; x += 13) {
      EXPECT_FLOAT_EQ(p.at(0, y, x), 1.0f);
      EXPECT_FLOAT_EQ(p.at(1, y, x), -1.0f);
      EXPECT_FLOAT_EQ(p.at(2, y, x), -1.0f);
    }
}

TEST(Prepare, BilinearTwoByTwoToFourByFour) {
  // Red channel [[0, 100], [200, 40]]. Half-pixel centers put the 4 output
  // samples at source offsets 0 (clamped), 0.25, 0.75, 1 (clamped) per axis.
  RgbImage f(2, 2);
  f.set(0, 0, {0, 0, 0});
  f.set(1, 0, {100, 0, 0});
  f.set(0, 1, {200, 0, 0});
  f.set(1, 1, {40, 0, 0});
  const double expected[4][4] = {
      {0, 25, 75, 100},
      {50, 58.75, 76.25, 85},
      {150, 126.25, 78.75, 55},
      {200, 160, 80, 40},
  };
  const PlanarImage p = apply_and_prepare(f, BinaryMask(2, 2, true), 4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      EXPECT_NEAR(p.at(0, y, x), (expected[y][x] / 255.0 - 0.5) / 0.5, 1e-6) << y << "," << x;
      EXPECT_FLOAT_EQ(p.at(1, y, x), -1.0f);
    }
}

TEST(Prepare, MaskedPixelsZeroedBeforeResize) {
  RgbImage f(2, 1, {255, 255, 255});
  BinaryMask m(2, 1, true);
  m.bits[1] = 0;
  const PlanarImage p = apply_and_prepare(f, m, 2, 1);
  EXPECT_FLOAT_EQ(p.at(0, 0, 0), 1.0f);
  EXPECT_FLOAT_EQ(p.at(0, 0, 1), -1.0f);
}

TEST(Prepare, DimensionMismatchRejected) {
  EXPECT_THROW(apply_and_prepare(uniform(10, 10, {}), BinaryMask(10, 9)), ArgumentError);
}

TEST(Prepare, OutputBounded) {
  Rng rng(31);
  RgbImage f(37, 29);
  for (int y = 0; y < 29; ++y)
    for (int x = 0; x < 37; ++x)
      f.set(x, y, {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                   static_cast<std::uint8_t>(rng.below(256))});
  const PlanarImage p = apply_and_prepare(f, random_mask(rng, 37, 29, 0.5), 50, 40);
  for (float v : p.values) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Iou, Basics) {
  BinaryMask a(4, 4), b(4, 4);
  EXPECT_DOUBLE_EQ(iou(a, b), 1.0);
  a.bits[0] = a.bits[1] = 1;
  b.bits[1] = b.bits[2] = 1;
  EXPECT_DOUBLE_EQ(iou(a, b), 1.0 / 3.0);
}
