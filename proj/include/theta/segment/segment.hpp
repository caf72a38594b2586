#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "theta/core/image.hpp"

namespace theta::segment {

struct Hsv {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

/// Hexcone conversion; hue is 0 when saturation is 0.
Hsv rgb_to_hsv(Rgb pixel);

/// Half-open hue interval [lo, hi) in degrees.
struct HueBand {
  double lo = 0.0;
  double hi = 0.0;
};

struct HsvThresholds {
  std::vector<HueBand> hue_bands{{0.0, 20.0}, {340.0, 360.0}};
  double sat_min = 0.4;
  double val_min = 0.2;

  /// Throws ArgumentError when a band or a minimum is out of range.
  void validate() const;
  bool accepts(const Hsv& hsv) const;
};

/// Per-pixel confidence in [0, 1].
struct SoftMask {
  int width = 0;
  int height = 0;
  std::vector<float> values;
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h, bool fill = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Source of per-pixel hand confidences. The HSV provider is the only one built
/// in; learned segmenters plug in here and share the threshold/morphology path.
class SoftMaskProvider {
 public:
  virtual ~SoftMaskProvider() = default;
  virtual SoftMask mask(const RgbImage& frame) const = 0;
};

SoftMask hsv_mask(const RgbImage& frame, const HsvThresholds& t);

class HsvMaskProvider final : public SoftMaskProvider {
 public:
  explicit HsvMaskProvider(HsvThresholds thresholds);
  SoftMask mask(const RgbImage& frame) const override { return hsv_mask(frame, thresholds_); }

 private:
  HsvThresholds thresholds_;
};

/// True where confidence >= level.
BinaryMask threshold(const SoftMask& mask, double level = 0.5);

/// 3x3 square structuring element. Out-of-frame pixels count as false for
/// erosion and are ignored by dilation.
BinaryMask erode(const BinaryMask& mask);
BinaryMask dilate(const BinaryMask& mask);

/// Opening followed by closing.
BinaryMask morph_refine(const BinaryMask& mask);

inline constexpr int kPreparedSize = 224;

/// Zeroes masked-out pixels, resizes bilinearly (half-pixel centers) and maps
/// each channel to [-1, 1] via (x/255 - 0.5)/0.5. Output is 3 x out_h x out_w.
PlanarImage apply_and_prepare(const RgbImage& frame, const BinaryMask& mask,
                              int out_width = kPreparedSize, int out_height = kPreparedSize);

/// Full per-view path: provider -> threshold 0.5 -> morph_refine -> prepare.
PlanarImage segment_and_prepare(const RgbImage& frame, const SoftMaskProvider& provider);

/// Intersection over union of two equally sized masks (1 when both are empty).
double iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace theta::segment
