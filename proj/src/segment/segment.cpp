#include "theta/segment/segment.hpp"

#include <algorithm>
#include <cmath>

#include "theta/core/error.hpp"

namespace theta::segment {

Hsv rgb_to_hsv(Rgb pixel) {
  const double r = pixel.r / 255.0;
  const double g = pixel.g / 255.0;
  const double b = pixel.b / 255.0;
  const double max = std::max({r, g, b});
  const double min = std::min({r, g, b});
  const double chroma = max - min;

  Hsv out;
  out.v = max;
  out.s = max > 0.0 ? chroma / max : 0.0;
  if (chroma <= 0.0) return out;

  double h;
  if (max == r) {
    h = std::fmod((g - b) / chroma, 6.0);
  } else if (max == g) {
    h = (b - r) / chroma + 2.0;
  } else {
    h = (r - g) / chroma + 4.0;
  }
  h *= 60.0;
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

void HsvThresholds::validate() const {
  for (const auto& band : hue_bands) {
    if (!(band.lo >= 0.0 && band.hi <= 360.0 && band.lo < band.hi)) {
      throw ArgumentError("hue band must satisfy 0 <= lo < hi <= 360");
    }
  }
  if (!(sat_min >= 0.0 && sat_min <= 1.0) || !(val_min >= 0.0 && val_min <= 1.0)) {
    throw ArgumentError("sat_min and val_min must lie in [0, 1]");
  }
}

bool HsvThresholds::accepts(const Hsv& hsv) const {
  if (hsv.s < sat_min || hsv.v < val_min) return false;
  for (const auto& band : hue_bands) {
    if (hsv.h >= band.lo && hsv.h < band.hi) return true;
  }
  return false;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

SoftMask hsv_mask(const RgbImage& frame, const HsvThresholds& t) {
  SoftMask out{frame.width(), frame.height(), std::vector<float>(frame.pixel_count(), 0.0f)};
  const auto& px = frame.bytes();
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    const Rgb c{px[3 * i], px[3 * i + 1], px[3 * i + 2]};
    out.values[i] = t.accepts(rgb_to_hsv(c)) ? 1.0f : 0.0f;
  }
  return out;
}

HsvMaskProvider::HsvMaskProvider(HsvThresholds thresholds) : thresholds_(std::move(thresholds)) {
  thresholds_.validate();
}

BinaryMask threshold(const SoftMask& mask, double level) {
  if (!(level >= 0.0 && level <= 1.0)) throw ArgumentError("threshold level must lie in [0, 1]");
  BinaryMask out(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    out.bits[i] = static_cast<double>(std::clamp(mask.values[i], 0.0f, 1.0f)) >= level ? 1 : 0;
  }
  return out;
}

namespace {

// The 3x3 square element is separable into a 1x3 pass and a 3x1 pass.
// Missing neighbours read as false: that is the erosion border rule, and it
// leaves dilation equal to an OR over in-frame neighbours.
template <bool kErode>
BinaryMask morph_pass(const BinaryMask& in) {
  const int w = in.width, h = in.height;
  BinaryMask rows(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = &in.bits[static_cast<std::size_t>(y) * w];
    std::uint8_t* dst = &rows.bits[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      const std::uint8_t l = x > 0 ? src[x - 1] : 0;
      const std::uint8_t r = x + 1 < w ? src[x + 1] : 0;
      dst[x] = kErode ? (l & src[x] & r) : (l | src[x] | r);
    }
  }
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* up = y > 0 ? &rows.bits[static_cast<std::size_t>(y - 1) * w] : nullptr;
    const std::uint8_t* mid = &rows.bits[static_cast<std::size_t>(y) * w];
    const std::uint8_t* down = y + 1 < h ? &rows.bits[static_cast<std::size_t>(y + 1) * w] : nullptr;
    std::uint8_t* dst = &out.bits[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      const std::uint8_t u = up ? up[x] : 0;
      const std::uint8_t d = down ? down[x] : 0;
      dst[x] = kErode ? (u & mid[x] & d) : (u | mid[x] | d);
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask) { return morph_pass<true>(mask); }
BinaryMask dilate(const BinaryMask& mask) { return morph_pass<false>(mask); }

BinaryMask morph_refine(const BinaryMask& mask) {
  const BinaryMask opened = dilate(erode(mask));
  return erode(dilate(opened));
}

namespace {

struct Tap {
  int i0 = 0, i1 = 0;
  double f = 0.0;
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    taps[d] = {i0, std::min(i0 + 1, src - 1), s - i0};
  }
  return taps;
}

}  // namespace

PlanarImage apply_and_prepare(const RgbImage& frame, const BinaryMask& mask, int out_width,
                              int out_height) {
  if (frame.width() != mask.width || frame.height() != mask.height) {
    throw ArgumentError("mask " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                        " does not match frame " + std::to_string(frame.width()) + "x" +
                        std::to_string(frame.height()));
  }
  if (out_width <= 0 || out_height <= 0) throw ArgumentError("output size must be positive");

  const auto xs = bilinear_taps(frame.width(), out_width);
  const auto ys = bilinear_taps(frame.height(), out_height);
  const auto& px = frame.bytes();
  const int w = frame.width();
  auto sample = [&](int x, int y, int c) -> double {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    return mask.bits[i] ? px[3 * i + c] : 0.0;
  };

  PlanarImage out(3, out_height, out_width);
  for (int oy = 0; oy < out_height; ++oy) {
    const Tap& ty = ys[oy];
    for (int ox = 0; ox < out_width; ++ox) {
      const Tap& tx = xs[ox];
      for (int c = 0; c < 3; ++c) {
        const double top = sample(tx.i0, ty.i0, c) * (1.0 - tx.f) + sample(tx.i1, ty.i0, c) * tx.f;
        const double bot = sample(tx.i0, ty.i1, c) * (1.0 - tx.f) + sample(tx.i1, ty.i1, c) * tx.f;
        const double v = top * (1.0 - ty.f) + bot * ty.f;
        out.at(c, oy, ox) = static_cast<float>(std::clamp((v / 255.0 - 0.5) / 0.5, -1.0, 1.0));
      }
    }
  }
  return out;
}

PlanarImage segment_and_prepare(const RgbImage& frame, const SoftMaskProvider& provider) {
  return apply_and_prepare(frame, morph_refine(threshold(provider.mask(frame), 0.5)));
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) throw ArgumentError("mask size mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += a.bits[i] & b.bits[i];
    uni += a.bits[i] | b.bits[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace theta::segment
